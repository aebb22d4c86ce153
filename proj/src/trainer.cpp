#include "orthopred/trainer.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <optional>

namespace orthopred {

// ---------------------------------------------------------------------------
// Data
// ---------------------------------------------------------------------------

SyntheticDataSpec SyntheticDataSpec::make(std::size_t d, std::size_t r, double spectrum_power, double obs_noise,
                                          Rng& rng) {
    if (r == 0 || r > d) throw ConfigError("latent_rank must lie in [1, d]");
    SyntheticDataSpec s;
    s.latent_rank = r;
    s.mixing = random_orthonormal(d, r, rng);
    s.source_spectrum.resize(r);
    for (std::size_t i = 0; i < r; ++i) s.source_spectrum[i] = std::pow(static_cast<double>(i + 1), -spectrum_power);
    s.obs_noise = obs_noise;
    return s;
}

Matrix SyntheticDataSpec::population_covariance() const {
    Matrix md = mixing;
    for (std::size_t i = 0; i < md.rows(); ++i)
        for (std::size_t j = 0; j < latent_rank; ++j) md(i, j) *= source_spectrum[j];
    return add_identity(matmul_transpose(md, mixing), obs_noise * obs_noise);
}

std::pair<Matrix, Matrix> sample_batch(const SyntheticDataSpec& spec, std::size_t b, const Augmentation& aug,
                                       Rng& rng) {
    const std::size_t r = spec.latent_rank;
    Matrix s(b, r);
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < r; ++j) s(i, j) = std::sqrt(spec.source_spectrum[j]) * rng.normal();
    Matrix o = matmul_transpose(s, spec.mixing);
    if (spec.obs_noise > 0.0)
        for (double& v : o.data()) v += spec.obs_noise * rng.normal();

    const auto view = [&] {
        Matrix x = o;
        for (double& v : x.data()) {
            if (aug.mask_prob > 0.0 && rng.bernoulli(aug.mask_prob)) v = 0.0;
            if (aug.noise_sigma > 0.0) v += aug.noise_sigma * rng.normal();
        }
        return x;
    };
    Matrix x1 = view();
    Matrix x2 = view();
    return {std::move(x1), std::move(x2)};
}

Matrix view_covariance(const SyntheticDataSpec& spec, const Augmentation& aug) {
    const Matrix c = spec.population_covariance();
    const double keep = 1.0 - aug.mask_prob;
    Matrix out = c * (keep * keep);
    for (std::size_t i = 0; i < out.rows(); ++i)
        out(i, i) += aug.mask_prob * keep * c(i, i) + aug.noise_sigma * aug.noise_sigma;
    return out;
}

// ---------------------------------------------------------------------------
// Loss and gradients
// ---------------------------------------------------------------------------

namespace {

void require_loss_shapes(const Matrix& z_on, const Matrix& z_tg, const Matrix& p) {
    if (z_on.rows() != z_tg.rows() || z_on.cols() != p.rows() || p.cols() != z_tg.cols())
        throw DimensionError("byol_loss: inconsistent shapes");
}

double row_norm(const Matrix& m, std::size_t i) { return norm2(m.row(i)); }

// ∂/∂u of Σᵢ ‖uᵢ/‖uᵢ‖ − tᵢ/‖tᵢ‖‖² with respect to u (rows), t held constant:
//   (2/‖u‖)(−t̂ + û(ûᵀt̂)).
Matrix normalized_row_grad(const Matrix& u, const Matrix& t) {
    Matrix g(u.rows(), u.cols());
    for (std::size_t i = 0; i < u.rows(); ++i) {
        const double nu = row_norm(u, i), nt = row_norm(t, i);
        if (nu == 0.0 || nt == 0.0) throw DomainError("normalized loss: zero latent row");
        double c = 0.0;
        for (std::size_t j = 0; j < u.cols(); ++j) c += (u(i, j) / nu) * (t(i, j) / nt);
        for (std::size_t j = 0; j < u.cols(); ++j)
            g(i, j) = 2.0 / nu * (-t(i, j) / nt + (u(i, j) / nu) * c);
    }
    return g;
}

} // namespace

double byol_loss(const Matrix& z_on, const Matrix& z_tg, const Matrix& p, bool normalized) {
    require_loss_shapes(z_on, z_tg, p);
    const Matrix u = matmul(z_on, p);
    if (!normalized) {
        const double n = frobenius_norm(u - z_tg);
        return n * n;
    }
    double loss = 0.0;
    for (std::size_t i = 0; i < u.rows(); ++i) {
        const double nu = row_norm(u, i), nt = row_norm(z_tg, i);
        if (nu == 0.0 || nt == 0.0) throw DomainError("normalized loss: zero latent row");
        for (std::size_t j = 0; j < u.cols(); ++j) {
            const double e = u(i, j) / nu - z_tg(i, j) / nt;
            loss += e * e;
        }
    }
    return loss;
}

Matrix encoder_grad(const Matrix& x, const Matrix& z_tg, const Matrix& p, const Matrix& a_online, bool normalized) {
    const Matrix z = matmul(x, a_online);
    require_loss_shapes(z, z_tg, p);
    const Matrix u = matmul(z, p);
    const Matrix du = normalized ? normalized_row_grad(u, z_tg) : (u - z_tg) * 2.0;
    return matmul_transpose(transpose_matmul(x, du), p);
}

Matrix target_latent_grad(const Matrix& z_on, const Matrix& z_tg, const Matrix& p, bool normalized) {
    require_loss_shapes(z_on, z_tg, p);
    const Matrix u = matmul(z_on, p);
    if (!normalized) return (u - z_tg) * -2.0;
    // Same form with the roles of u and t exchanged.
    return normalized_row_grad(z_tg, u);
}

Matrix sgd_update(const Matrix& a, const Matrix& grad, double lr, double weight_decay) {
    return a - (grad + a * weight_decay) * lr;
}

std::pair<double, double> balancing_check(const Matrix& a_online, const Matrix& p) {
    const Matrix ata = gram(a_online);
    const double f = static_cast<double>(ata.rows());
    const double bal = frobenius_norm(ata - gram(p)) / std::max(frobenius_norm(ata), 1e-12);
    const double dec = frobenius_norm(add_identity(ata, -1.0)) / std::sqrt(f);
    return {bal, dec};
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
    const auto need = [](bool ok, const char* key, const char* what) {
        if (!ok) throw ConfigError(fmt::format("{}: {}", key, what));
    };
    need(d >= 1, "d", "must be at least 1");
    need(f >= 1 && f <= d, "f", "must lie in [1, d]");
    need(b >= 2, "b", "must be at least 2");
    need(std::isfinite(lr) && lr >= 0.0, "lr", "must be finite and >= 0");
    need(std::isfinite(weight_decay) && weight_decay >= 0.0, "weight_decay", "must be finite and >= 0");
    need(tau_target >= 0.0 && tau_target <= 1.0, "tau_target", "must lie in [0, 1]");
    need(std::isfinite(aug_noise_sigma) && aug_noise_sigma >= 0.0, "aug_noise_sigma", "must be finite and >= 0");
    need(aug_mask_prob >= 0.0 && aug_mask_prob < 1.0, "aug_mask_prob", "must lie in [0, 1)");
    need(latent_rank >= 1 && latent_rank <= d, "latent_rank", "must lie in [1, d]");
    need(std::isfinite(spectrum_power), "spectrum_power", "must be finite");
    need(std::isfinite(obs_noise) && obs_noise >= 0.0, "obs_noise", "must be finite and >= 0");
    need(std::isfinite(init_scale) && init_scale > 0.0, "init_scale", "must be positive");
    need(log_interval >= 1, "log_interval", "must be at least 1");
    predictor_params.validate();
}

namespace {

// Substreams of the run seed.
enum : std::uint64_t { kStreamData = 1, kStreamInit = 2, kStreamBatches = 3 };

} // namespace

SyntheticDataSpec make_data_spec(const TrainConfig& cfg) {
    Rng rng = Rng::derive(cfg.seed, kStreamData);
    return SyntheticDataSpec::make(cfg.d, cfg.latent_rank, cfg.spectrum_power, cfg.obs_noise, rng);
}

Matrix initial_weights(const TrainConfig& cfg) {
    Rng rng = Rng::derive(cfg.seed, kStreamInit);
    return gaussian_matrix(cfg.d, cfg.f, rng, cfg.init_scale / std::sqrt(static_cast<double>(cfg.d)));
}

TrainResult train_byol(const TrainConfig& cfg) {
    cfg.validate();
    const SyntheticDataSpec data = make_data_spec(cfg);
    Rng batch_rng = Rng::derive(cfg.seed, kStreamBatches);
    const Augmentation aug{cfg.aug_noise_sigma, cfg.aug_mask_prob};

    TrainResult res;
    res.weights.a_online = initial_weights(cfg);
    res.weights.a_target = res.weights.a_online;
    Matrix& a = res.weights.a_online;
    Matrix& a_tg = res.weights.a_target;

    PredictorState pred{Matrix(), cfg.predictor, cfg.predictor_params, 0};
    const Matrix input_cov = view_covariance(data, aug);

    for (std::size_t t = 1; t <= cfg.steps; ++t) {
        double loss = 0.0;
        try {
            const auto [x, x2] = sample_batch(data, cfg.b, aug, batch_rng);
            const Matrix z = matmul(x, a);
            // Without the stop-gradient the target branch is the online
            // network itself and receives gradient.
            const Matrix z_tg = cfg.ablate_stop_gradient ? matmul(x2, a) : matmul(x2, a_tg);

            const Matrix p_batch = apply_ridge(compute_predictor(cfg.predictor, z, z_tg, cfg.predictor_params),
                                               cfg.predictor_params.ridge_alpha);
            if (pred.p.empty()) {
                pred.p = p_batch;
                pred.step = 1;
            } else {
                pred = ema_update(std::move(pred), p_batch);
            }

            loss = byol_loss(z, z_tg, pred.p, cfg.loss_normalized);
            Matrix grad = encoder_grad(x, z_tg, pred.p, a, cfg.loss_normalized);
            if (cfg.ablate_stop_gradient)
                grad += transpose_matmul(x2, target_latent_grad(z, z_tg, pred.p, cfg.loss_normalized));

            a = sgd_update(a, grad, cfg.lr, cfg.weight_decay);
            if (cfg.ablate_target_ema) {
                a_tg = a;
            } else {
                a_tg *= cfg.tau_target;
                a_tg += a * (1.0 - cfg.tau_target);
            }
        } catch (const TrainingAborted&) {
            throw;
        } catch (const Error& e) {
            throw TrainingAborted(fmt::format("training aborted at step {}: {}", t, e.what()), t,
                                  std::move(res.log));
        }
        if (!std::isfinite(loss) || !a.all_finite() || !a_tg.all_finite() || !pred.p.all_finite())
            throw TrainingAborted(fmt::format("training aborted at step {}: non-finite weights or loss", t), t,
                                  std::move(res.log));

        if (t % cfg.log_interval == 0 || t == cfg.steps) {
            TrainRecord r;
            r.step = t;
            r.loss = loss;
            // Population covariance AᵀE[xxᵀ]A of the online latents. A batch of
            // 64 in 16 dimensions spreads the spectrum too much to read rank
            // from. Stable rank is scale-free; normalising first keeps the SVD
            // clear of underflow when the latents collapse towards zero.
            Matrix cov = symmetrize(transpose_matmul(a, matmul(input_cov, a)));
            if (const double n = frobenius_norm(cov); n > 0.0) cov /= n;
            try {
                const SpectrumDiagnostics pd = spectrum_diagnostics(pred.p, t);
                r.pred_srank = pd.srank;
                r.pred_trace = pd.trace;
                r.dist_polar = pd.dist_polar;
                r.eps_proj = pd.quasi.eps_proj;
                r.eps_sym = pd.quasi.eps_sym;
                r.eps_orth = pd.quasi.eps_orth;
                r.latent_spectrum = normalize_by_max(singular_values(cov));
                // Σ(sᵢ/s₁)², safe when s₁² would underflow.
                r.latent_srank = 0.0;
                for (double s : r.latent_spectrum) r.latent_srank += s * s;
            } catch (const DomainError&) {
                // Zero predictor or zero latents: leave the spectral fields at 0.
            }
            std::tie(r.balancing_res, r.decorrelation_res) = balancing_check(a, pred.p);
            res.log.records.push_back(std::move(r));
        }
    }
    res.predictor = pred.p;
    return res;
}

// ---------------------------------------------------------------------------
// Config text
// ---------------------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const std::size_t b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* expected) {
    throw ConfigError(fmt::format("config key '{}': invalid value '{}' (expected {})", key, value, expected));
}

double to_real(std::string_view key, std::string_view v) {
    double x = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (v.empty() || ec != std::errc{} || p != v.data() + v.size()) bad_value(key, v, "a real number");
    return x;
}

std::uint64_t to_count(std::string_view key, std::string_view v) {
    std::uint64_t x = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (v.empty() || ec != std::errc{} || p != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
    return x;
}

bool to_bool(std::string_view key, std::string_view v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    bad_value(key, v, "true or false");
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

} // namespace

void set_config_value(TrainConfig& cfg, std::string_view key, std::string_view value) {
    key = trim(key);
    value = trim(value);
    PredictorParams& pp = cfg.predictor_params;
    if (key == "d") cfg.d = to_count(key, value);
    else if (key == "f") cfg.f = to_count(key, value);
    else if (key == "b") cfg.b = to_count(key, value);
    else if (key == "steps") cfg.steps = to_count(key, value);
    else if (key == "lr") cfg.lr = to_real(key, value);
    else if (key == "weight_decay") cfg.weight_decay = to_real(key, value);
    else if (key == "tau_target") cfg.tau_target = to_real(key, value);
    else if (key == "predictor") {
        try {
            cfg.predictor = parse_predictor_kind(value);
        } catch (const ConfigError&) {
            bad_value(key, value, "one of LRP, DirectPred, DirectCopy, NE, Visser, NS, NS2, Stiefel");
        }
        pp = PredictorParams::defaults_for(cfg.predictor);
    }
    else if (key == "ridge_alpha") pp.ridge_alpha = to_real(key, value);
    else if (key == "ema_rho") pp.ema_rho = to_real(key, value);
    else if (key == "n_iters") pp.sqrt_cfg.n_iters = to_count(key, value);
    else if (key == "visser_eta") pp.sqrt_cfg.visser_eta = to_real(key, value);
    else if (key == "pinv_cutoff") pp.pinv_cutoff = to_real(key, value);
    else if (key == "spectral_normalize") pp.spectral_normalize = to_bool(key, value);
    else if (key == "direct_batch_scaled") pp.direct_batch_scaled = to_bool(key, value);
    else if (key == "loss_normalized") cfg.loss_normalized = to_bool(key, value);
    else if (key == "seed") cfg.seed = to_count(key, value);
    else if (key == "aug_noise_sigma") cfg.aug_noise_sigma = to_real(key, value);
    else if (key == "aug_mask_prob") cfg.aug_mask_prob = to_real(key, value);
    else if (key == "latent_rank") cfg.latent_rank = to_count(key, value);
    else if (key == "spectrum_power") cfg.spectrum_power = to_real(key, value);
    else if (key == "obs_noise") cfg.obs_noise = to_real(key, value);
    else if (key == "init_scale") cfg.init_scale = to_real(key, value);
    else if (key == "ablate_stop_gradient") cfg.ablate_stop_gradient = to_bool(key, value);
    else if (key == "ablate_target_ema") cfg.ablate_target_ema = to_bool(key, value);
    else if (key == "log_interval") cfg.log_interval = to_count(key, value);
    else throw ConfigError(fmt::format("unknown config key '{}'", key));
}

std::vector<std::pair<std::string, std::string>> parse_key_value_text(std::string_view text) {
    std::vector<std::pair<std::string, std::string>> entries;
    std::size_t pos = 0, line_no = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (const std::size_t hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError(fmt::format("config line {}: expected 'key = value'", line_no));
        entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return entries;
}

TrainConfig parse_train_config(std::string_view text) {
    const auto entries = parse_key_value_text(text);
    TrainConfig cfg;
    // The predictor kind sets parameter defaults, so it goes first.
    for (const auto& [k, v] : entries)
        if (k == "predictor") set_config_value(cfg, k, v);
    for (const auto& [k, v] : entries)
        if (k != "predictor") set_config_value(cfg, k, v);
    return cfg;
}

std::map<std::string, std::string> config_entries(const TrainConfig& cfg) {
    const PredictorParams& pp = cfg.predictor_params;
    return {
        {"d", std::to_string(cfg.d)},
        {"f", std::to_string(cfg.f)},
        {"b", std::to_string(cfg.b)},
        {"steps", std::to_string(cfg.steps)},
        {"lr", format_real(cfg.lr)},
        {"weight_decay", format_real(cfg.weight_decay)},
        {"tau_target", format_real(cfg.tau_target)},
        {"predictor", std::string(predictor_name(cfg.predictor))},
        {"ridge_alpha", format_real(pp.ridge_alpha)},
        {"ema_rho", format_real(pp.ema_rho)},
        {"n_iters", std::to_string(pp.sqrt_cfg.n_iters)},
        {"visser_eta", format_real(pp.sqrt_cfg.visser_eta)},
        {"pinv_cutoff", format_real(pp.pinv_cutoff)},
        {"spectral_normalize", bool_text(pp.spectral_normalize)},
        {"direct_batch_scaled", bool_text(pp.direct_batch_scaled)},
        {"loss_normalized", bool_text(cfg.loss_normalized)},
        {"seed", std::to_string(cfg.seed)},
        {"aug_noise_sigma", format_real(cfg.aug_noise_sigma)},
        {"aug_mask_prob", format_real(cfg.aug_mask_prob)},
        {"latent_rank", std::to_string(cfg.latent_rank)},
        {"spectrum_power", format_real(cfg.spectrum_power)},
        {"obs_noise", format_real(cfg.obs_noise)},
        {"init_scale", format_real(cfg.init_scale)},
        {"ablate_stop_gradient", bool_text(cfg.ablate_stop_gradient)},
        {"ablate_target_ema", bool_text(cfg.ablate_target_ema)},
        {"log_interval", std::to_string(cfg.log_interval)},
    };
}

std::string config_to_text(const TrainConfig& cfg) {
    std::string out;
    for (const auto& [k, v] : config_entries(cfg)) out += fmt::format("{} = {}\n", k, v);
    return out;
}

} // namespace orthopred
