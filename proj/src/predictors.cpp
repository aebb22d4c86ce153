#include "orthopred/predictors.hpp"

#include "orthopred/errors.hpp"

#include <cmath>
#include <string>

namespace orthopred {

std::string_view predictor_name(PredictorKind kind) {
    switch (kind) {
    case PredictorKind::LRP: return "LRP";
    case PredictorKind::DirectPred: return "DirectPred";
    case PredictorKind::DirectCopy: return "DirectCopy";
    case PredictorKind::NE: return "NE";
    case PredictorKind::Visser: return "Visser";
    case PredictorKind::NS: return "NS";
    case PredictorKind::NS2: return "NS2";
    case PredictorKind::Stiefel: return "Stiefel";
    }
    return "?";
}

PredictorKind parse_predictor_kind(std::string_view name) {
    for (PredictorKind k : kAllPredictorKinds)
        if (predictor_name(k) == name) return k;
    throw ConfigError("unknown predictor kind '" + std::string(name) + "'");
}

bool needs_target(PredictorKind kind) {
    return kind == PredictorKind::LRP || kind == PredictorKind::NE;
}

PredictorParams PredictorParams::defaults_for(PredictorKind kind) {
    PredictorParams p;
    switch (kind) {
    case PredictorKind::LRP: p.ema_rho = 0.8; break;
    case PredictorKind::NE: p.ema_rho = 0.99; break;
    case PredictorKind::Visser:
        p.ema_rho = 0.99;
        p.sqrt_cfg.n_iters = kDefaultVisserIters;
        break;
    case PredictorKind::NS:
        p.ema_rho = 0.99;
        p.sqrt_cfg.n_iters = kDefaultNsIters;
        break;
    case PredictorKind::NS2:
        p.ema_rho = 0.99;
        p.sqrt_cfg.n_iters = kDefaultNs2Iters;
        break;
    case PredictorKind::Stiefel:
        p.ema_rho = 0.999;
        p.sqrt_cfg.n_iters = kDefaultStiefelIters;
        break;
    case PredictorKind::DirectPred:
    case PredictorKind::DirectCopy: p.ema_rho = 0.0; break;
    }
    return p;
}

void PredictorParams::validate() const {
    if (!(ridge_alpha >= 0.0) || !std::isfinite(ridge_alpha))
        throw ConfigError("ridge_alpha must be finite and >= 0");
    if (!(ema_rho >= 0.0 && ema_rho <= 1.0)) throw ConfigError("ema_rho must lie in [0, 1]");
    if (!(pinv_cutoff > 0.0)) throw ConfigError("pinv_cutoff must be positive");
    sqrt_cfg.validate();
}

double covariance_scale(PredictorKind kind, std::size_t batch, const PredictorParams& params) {
    const double inv_b = 1.0 / static_cast<double>(batch);
    switch (kind) {
    case PredictorKind::Visser:
    case PredictorKind::NS:
    case PredictorKind::NS2: return inv_b;
    case PredictorKind::DirectPred:
    case PredictorKind::DirectCopy: return params.direct_batch_scaled ? inv_b : 1.0;
    default: return 1.0;
    }
}

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError(std::string(op) + ": online and target batches differ in shape");
}

} // namespace

Matrix lrp_predictor(const Matrix& z_on, const Matrix& z_tg, double cutoff) {
    require_same_shape(z_on, z_tg, "lrp_predictor");
    const double c = 0.5 * frobenius_norm(z_on) + 0.5 * frobenius_norm(z_tg) + 1e-12;
    return matmul(pseudo_inverse(z_on / c, cutoff), z_tg / c);
}

Matrix ne_formula(const Matrix& z_on, const Matrix& z_tg) {
    require_same_shape(z_on, z_tg, "ne_predictor");
    const Matrix ztzx = transpose_matmul(z_on, z_tg);
    return ztzx * 2.0 - matmul(gram(z_on), ztzx);
}

Matrix ne_predictor(const Matrix& z_on, const Matrix& z_tg) {
    const double n_on = operator_norm(z_on);
    const double n_tg = operator_norm(z_tg);
    if (n_on == 0.0 || n_tg == 0.0) throw DomainError("ne_predictor: zero latent batch");
    const Matrix raw = ne_formula(z_on / n_on, z_tg / n_tg);
    const double n = operator_norm(raw);
    if (n == 0.0) throw NumericError("ne_predictor: predictor vanished", 0);
    return raw / n;
}

Matrix compute_predictor(PredictorKind kind, const Matrix& z_on, const Matrix& z_tg,
                         const PredictorParams& params) {
    if (needs_target(kind) && z_tg.empty())
        throw DomainError(std::string(predictor_name(kind)) + " predictor requires target latents");

    const auto covariance = [&] { return gram(z_on) * covariance_scale(kind, z_on.rows(), params); };
    Matrix p;
    switch (kind) {
    case PredictorKind::LRP: p = lrp_predictor(z_on, z_tg, params.pinv_cutoff); break;
    case PredictorKind::NE: p = ne_predictor(z_on, z_tg); break;
    case PredictorKind::DirectPred: p = sqrt_eig(covariance()); break;
    case PredictorKind::DirectCopy: p = covariance(); break;
    case PredictorKind::Visser: p = visser_sqrt(covariance(), params.sqrt_cfg); break;
    case PredictorKind::NS:
        p = newton_schulz_sqrt(covariance(), params.sqrt_cfg.n_iters).sqrt_estimate();
        break;
    case PredictorKind::NS2: p = ns_squared_sqrt(covariance(), params.sqrt_cfg.n_iters); break;
    case PredictorKind::Stiefel: p = stiefel_project(covariance(), params.sqrt_cfg.n_iters).predictor; break;
    }
    if (params.spectral_normalize) p = spectral_normalize(p);
    return p;
}

Matrix spectral_normalize(const Matrix& p) {
    const double n = operator_norm(p);
    return n > 0.0 ? p / n : p;
}

Matrix apply_ridge(const Matrix& p, double alpha) {
    if (!p.is_square()) throw DimensionError("apply_ridge: predictor must be square");
    return add_identity(p, alpha);
}

PredictorState ema_update(PredictorState state, const Matrix& p_batch) {
    if (state.p.rows() != p_batch.rows() || state.p.cols() != p_batch.cols())
        throw DimensionError("ema_update: predictor shape mismatch");
    const double rho = state.params.ema_rho;
    state.p *= rho;
    state.p += p_batch * (1.0 - rho);
    ++state.step;
    return state;
}

} // namespace orthopred
