#include "orthopred/streampca.hpp"

#include "orthopred/errors.hpp"
#include "orthopred/matfun.hpp"
#include "orthopred/random.hpp"
#include "orthopred/riemann.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace orthopred {

namespace {

void require_dim(std::size_t got, std::size_t want, const char* op) {
    if (got != want) throw DimensionError(std::string(op) + ": dimension mismatch");
}

// XᵀX p without forming XᵀX.
Vector gram_apply(const Matrix& x, std::span<const double> p) {
    return transpose_matvec(x, matvec(x, p));
}

Matrix single_row(std::span<const double> x) {
    return Matrix(1, x.size(), Vector(x.begin(), x.end()));
}

} // namespace

Rank1State oja_step(Rank1State state, const Matrix& x_batch, double eta) {
    require_dim(x_batch.cols(), state.p.size(), "oja_step");
    const Vector g = gram_apply(x_batch, state.p);
    for (std::size_t i = 0; i < g.size(); ++i) state.p[i] += eta * g[i];
    const double n = norm2(state.p);
    if (!(n > 0.0) || !std::isfinite(n)) throw NumericError("oja_step: degenerate iterate", state.step + 1);
    for (double& v : state.p) v /= n;
    state.eta = eta;
    ++state.step;
    return state;
}

Rank1State oja_step(Rank1State state, std::span<const double> x, double eta) {
    return oja_step(std::move(state), single_row(x), eta);
}

Vector krasulina_direction(const Matrix& x_batch, std::span<const double> p) {
    require_dim(x_batch.cols(), p.size(), "krasulina_direction");
    const Vector xp = matvec(x_batch, p);
    Vector d = transpose_matvec(x_batch, xp);
    const double pn2 = dot(p, p);
    const double ratio = dot(xp, xp) / pn2;  // (x·p/‖p‖)² summed over rows
    for (std::size_t i = 0; i < d.size(); ++i) d[i] -= ratio * p[i];
    return d;
}

Rank1State krasulina_step(Rank1State state, const Matrix& x_batch, double eta) {
    if (norm2(state.p) < 1e-300) throw NumericError("krasulina_step: iterate underflow", state.step);
    const Vector d = krasulina_direction(x_batch, state.p);
    for (std::size_t i = 0; i < d.size(); ++i) state.p[i] += eta * d[i];
    if (!std::isfinite(norm2(state.p))) throw NumericError("krasulina_step: non-finite iterate", state.step + 1);
    state.eta = eta;
    ++state.step;
    return state;
}

Rank1State krasulina_step(Rank1State state, std::span<const double> x, double eta) {
    return krasulina_step(std::move(state), single_row(x), eta);
}

// With Π = ppᵀ/s, s = ‖p‖², R = Z − ZΠ and M = ∂L/∂Π = −2ZᵀR,
//   ∇_p L = (M + Mᵀ)p/s − 2(pᵀMp) p/s².
Vector byol_rank1_grad(const Matrix& z, std::span<const double> p) {
    require_dim(z.cols(), p.size(), "byol_rank1_grad");
    const double s = dot(p, p);
    if (!(s > 0.0)) throw DomainError("byol_rank1_grad: zero predictor vector");
    const std::size_t f = p.size();

    Matrix pi(f, f);
    for (std::size_t i = 0; i < f; ++i)
        for (std::size_t j = 0; j < f; ++j) pi(i, j) = p[i] * p[j] / s;
    const Matrix m = transpose_matmul(z, z - matmul(z, pi)) * -2.0;

    const Vector mp = matvec(m, p);
    const Vector mtp = transpose_matvec(m, p);
    const double pmp = dot(p, mp);
    Vector g(f);
    for (std::size_t i = 0; i < f; ++i) g[i] = (mp[i] + mtp[i]) / s - 2.0 * pmp * p[i] / (s * s);
    return g;
}

double byol_rank1_loss(const Matrix& z, std::span<const double> p) {
    require_dim(z.cols(), p.size(), "byol_rank1_loss");
    const double s = dot(p, p);
    const Vector zp = matvec(z, p);
    Matrix r = z;
    for (std::size_t i = 0; i < z.rows(); ++i)
        for (std::size_t j = 0; j < z.cols(); ++j) r(i, j) -= zp[i] * p[j] / s;
    const double n = frobenius_norm(r);
    return n * n;
}

Matrix orthonormalize_exact(const Matrix& q) {
    const SymEigResult e = sym_eig(gram(q));
    if (e.eigenvalues.empty() || e.eigenvalues.back() <= 1e-20 * e.eigenvalues.front())
        throw DomainError("orthonormalize_exact: frame has collapsed");
    return matmul(q, spectral_power(gram(q), -0.5));
}

FrameState matrix_krasulina_step(FrameState state, const Matrix& x_batch, double eta, Orthonormalization ortho) {
    require_dim(x_batch.cols(), state.p.rows(), "matrix_krasulina_step");
    if (state.p.cols() > state.p.rows()) throw DimensionError("matrix_krasulina_step: k > f");
    const Matrix xp = matmul(x_batch, state.p);
    Matrix next = state.p + transpose_matmul(x_batch, xp) * eta;
    if (!next.all_finite()) throw NumericError("matrix_krasulina_step: non-finite frame", state.step + 1);
    state.p = ortho == Orthonormalization::Polar ? retract_to_stiefel(next) : orthonormalize_exact(next);
    state.eta = eta;
    ++state.step;
    return state;
}

double alignment(std::span<const double> u, std::span<const double> v) {
    return std::abs(dot(u, v)) / (norm2(u) * norm2(v));
}

Vector principal_angles(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError("principal_angles: frames differ in shape");
    const Matrix qa = orthonormalize_exact(a);
    const Matrix qb = orthonormalize_exact(b);
    const Matrix c = transpose_matmul(qa, qb);
    // Cosines are descending, sines of the same angles ascending. acos loses
    // half the digits near zero, so small angles come from the sines.
    const Vector cosines = singular_values(c);
    const Vector sines = singular_values(qb - matmul(qa, c));
    const std::size_t k = cosines.size();
    Vector out(k);
    for (std::size_t i = 0; i < k; ++i) {
        const double cs = std::clamp(cosines[i], 0.0, 1.0);
        const double sn = std::clamp(sines[k - 1 - i], 0.0, 1.0);
        out[i] = cs > sn ? std::asin(sn) : std::acos(cs);
    }
    return out;
}

double kpca_objective(const Matrix& sigma, const Matrix& q) {
    return trace(sigma) - trace(transpose_matmul(q, matmul(sigma, q)));
}

KpcaReport kpca_bruteforce_check(const Matrix& sigma, std::size_t k, std::size_t trials, std::uint64_t seed) {
    if (!sigma.is_square() || k == 0 || k > sigma.rows())
        throw DimensionError("kpca_bruteforce_check: need 1 <= k <= f");
    const std::size_t f = sigma.rows();
    const SymEigResult e = sym_eig(sigma);
    Matrix top(f, k);
    for (std::size_t i = 0; i < f; ++i)
        for (std::size_t j = 0; j < k; ++j) top(i, j) = e.eigenvectors(i, j);

    KpcaReport r;
    r.optimal_objective = kpca_objective(sigma, top);
    r.best_random_objective = std::numeric_limits<double>::infinity();
    r.trials = trials;
    Rng rng(seed);
    for (std::size_t t = 0; t < trials; ++t) {
        const double obj = kpca_objective(sigma, random_orthonormal(f, k, rng));
        r.best_random_objective = std::min(r.best_random_objective, obj);
        if (r.optimal_objective <= obj + 1e-10) ++r.wins;
    }
    return r;
}

PcaTrace run_streaming_pca(const PcaStreamConfig& cfg, double hit_threshold) {
    const std::size_t f = cfg.spectrum.size();
    if (f == 0 || cfg.k == 0 || cfg.k > f) throw ConfigError("pca: need 1 <= k <= f");
    if (cfg.batch == 0) throw ConfigError("pca: batch must be at least 1");
    if (cfg.log_interval == 0) throw ConfigError("pca: log_interval must be at least 1");

    Vector sd(f);
    for (std::size_t i = 0; i < f; ++i) {
        if (!(cfg.spectrum[i] > 0.0)) throw ConfigError("pca: spectrum entries must be positive");
        sd[i] = std::sqrt(cfg.spectrum[i]);
    }
    // Leading eigenvector and top-k subspace of diag(spectrum).
    std::vector<std::size_t> order(f);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return cfg.spectrum[a] > cfg.spectrum[b]; });
    Vector e1(f, 0.0);
    e1[order[0]] = 1.0;
    Matrix top(f, cfg.k);
    for (std::size_t j = 0; j < cfg.k; ++j) top(order[j], j) = 1.0;
    const Matrix sigma = Matrix::diagonal(cfg.spectrum);

    Rng init_rng(cfg.seed);
    Rng stream = init_rng.split(1);
    Rank1State oja{gaussian_vector(f, init_rng), cfg.eta, 0};
    const double n0 = norm2(oja.p);
    for (double& v : oja.p) v /= n0;
    Rank1State kras = oja;
    FrameState frame{random_orthonormal(f, cfg.k, init_rng), cfg.frame_eta, 0};

    PcaTrace out;
    out.oja_hit = out.krasulina_hit = cfg.steps + 1;
    const auto record = [&](std::size_t step) {
        PcaRecord r;
        r.step = step;
        r.oja_alignment = alignment(oja.p, e1);
        r.krasulina_alignment = alignment(kras.p, e1);
        r.principal_angle_topk = principal_angles(frame.p, top).back();
        r.objective = trace(transpose_matmul(frame.p, matmul(sigma, frame.p)));
        out.records.push_back(r);
    };
    record(0);

    Matrix x(cfg.batch, f);
    for (std::size_t t = 1; t <= cfg.steps; ++t) {
        for (std::size_t i = 0; i < cfg.batch; ++i)
            for (std::size_t j = 0; j < f; ++j) x(i, j) = sd[j] * stream.normal();
        oja = oja_step(std::move(oja), x, cfg.eta);
        kras = krasulina_step(std::move(kras), x, cfg.eta);
        frame = matrix_krasulina_step(std::move(frame), x, cfg.frame_eta);
        if (out.oja_hit > cfg.steps && alignment(oja.p, e1) >= hit_threshold) out.oja_hit = t;
        if (out.krasulina_hit > cfg.steps && alignment(kras.p, e1) >= hit_threshold) out.krasulina_hit = t;
        if (t % cfg.log_interval == 0 || t == cfg.steps) record(t);
    }
    return out;
}

} // namespace orthopred
