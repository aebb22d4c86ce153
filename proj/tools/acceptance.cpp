// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.

#include "orthopred/cli.hpp"
#include "orthopred/diagnostics.hpp"
#include "orthopred/matfun.hpp"
#include "orthopred/predictors.hpp"
#include "orthopred/random.hpp"
#include "orthopred/riemann.hpp"
#include "orthopred/streampca.hpp"
#include "orthopred/trainer.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <sstream>

using namespace orthopred;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr double kNsTol = 1e-6;
constexpr double kVisserTol = 1e-3;
constexpr double kNs2Tol = 1e-4;
constexpr double kStiefelSpreadTol = 1e-4;
constexpr double kRetractTol = 1e-6;
constexpr double kSqrtBudget = 30.0;
constexpr double kLrpOrthTol = 1e-8;
constexpr double kIdentityRatioMax = 10.0;
constexpr double kKrasulinaTol = 1e-12;
constexpr double kFdTol = 1e-5;
constexpr double kKpcaBudget = 10.0;
constexpr double kAlignment = 0.99;
constexpr std::size_t kPcaSteps = 20000;
constexpr double kQuasiTol = 1e-10;
constexpr double kSrankFloor = 4.0;
constexpr double kTrainBudget = 120.0;

double rel(const Matrix& a, const Matrix& b) { return frobenius_norm(a - b) / frobenius_norm(b); }

struct Outcome {
    bool pass;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 20 SPD matrices, f = 64, eigenvalues log-spaced over a condition number of 100.
std::vector<Matrix> sqrt_family() {
    std::vector<Matrix> out;
    const Vector ev = log_spaced(1.0, 1e-2, 64);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        out.push_back(random_spd_with_spectrum(ev, rng));
    }
    return out;
}

Outcome square_roots() {
    const auto t0 = std::chrono::steady_clock::now();
    double ns = 0, visser = 0, ns2 = 0;
    for (const Matrix& s : sqrt_family()) {
        const Matrix exact = sqrt_eig(s);
        ns = std::max(ns, rel(newton_schulz_sqrt(s, 25).sqrt_estimate(), exact));
        SqrtIterConfig cfg;
        cfg.n_iters = 500;
        cfg.visser_eta = 0.5 / operator_norm(s);
        visser = std::max(visser, rel(visser_sqrt(s, cfg), exact));
        ns2 = std::max(ns2, rel(ns_squared_sqrt(s, 25), spectral_power(s, 0.25)));
    }
    const double t = seconds_since(t0);
    return {ns <= kNsTol && visser <= kVisserTol && ns2 <= kNs2Tol && t <= kSqrtBudget,
            fmt::format("NS {:.2e} <= {:.0e}, Visser {:.2e} <= {:.0e}, NS2 {:.2e} <= {:.0e}, {:.1f}s <= {:.0f}s", ns,
                        kNsTol, visser, kVisserTol, ns2, kNs2Tol, t, kSqrtBudget)};
}

Outcome stiefel() {
    double spread = 0;
    for (const Matrix& s : sqrt_family()) {
        const Vector sv = singular_values(stiefel_project(s, 25).scaled_projection);
        spread = std::max(spread, (sv.front() - sv.back()) / sv.front());
    }
    double idem = 0;
    Rng rng(100);
    for (int t = 0; t < 20; ++t) {
        const Matrix r = retract_to_stiefel(gaussian_matrix(64, 16, rng));
        idem = std::max(idem, rel(retract_to_stiefel(r), r));
    }
    return {spread <= kStiefelSpreadTol && idem <= kRetractTol,
            fmt::format("singular-value spread {:.2e} <= {:.0e}, retraction idempotence {:.2e} <= {:.0e}", spread,
                        kStiefelSpreadTol, idem, kRetractTol)};
}

Outcome lrp_projection() {
    Rng rng(200);
    double worst = 0;
    for (int t = 0; t < 100; ++t) {
        const Matrix z = gaussian_matrix(32, 16, rng);
        const Matrix zt = gaussian_matrix(32, 16, rng);
        const Matrix p = lrp_predictor(z, zt);
        worst = std::max(worst, frobenius_norm(transpose_matmul(z, matmul(z, p) - zt)));
    }
    return {worst <= kLrpOrthTol, fmt::format("max |Z^T(ZP - Z')|_F {:.2e} <= {:.0e}", worst, kLrpOrthTol)};
}

Outcome predictor_to_identity() {
    Rng rng(300);
    const Matrix z = gaussian_matrix(32, 16, rng);
    double lo = INFINITY, hi = 0;
    std::string ratios;
    for (double sigma : {1e-1, 1e-2, 1e-3, 1e-4}) {
        const Matrix zt = z + gaussian_matrix(32, 16, rng, sigma);
        const double r = frobenius_norm(add_identity(lrp_predictor(z, zt), -1.0)) / sigma;
        lo = std::min(lo, r);
        hi = std::max(hi, r);
        ratios += fmt::format(" {:.3f}", r);
    }
    return {hi / lo <= kIdentityRatioMax,
            fmt::format("|P - I|_F / sigma:{}, max/min {:.3f} <= {:.0f}", ratios, hi / lo, kIdentityRatioMax)};
}

Outcome krasulina_equivalence() {
    Rng rng(400);
    double eq = 0, fd = 0;
    for (int t = 0; t < 100; ++t) {
        const Matrix z = gaussian_matrix(24, 8, rng);
        const Vector p = gaussian_vector(8, rng);
        const Vector g = byol_rank1_grad(z, p);
        const Vector k = krasulina_direction(z, p);
        const double c = 2.0 / dot(p, p);
        double diff = 0, nrm = 0, fdiff = 0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            diff += std::pow(-g[i] - c * k[i], 2);
            nrm += std::pow(c * k[i], 2);
            Vector hi = p, lo = p;
            hi[i] += 1e-6;
            lo[i] -= 1e-6;
            fdiff += std::pow((byol_rank1_loss(z, hi) - byol_rank1_loss(z, lo)) / 2e-6 - g[i], 2);
        }
        eq = std::max(eq, std::sqrt(diff / nrm));
        fd = std::max(fd, std::sqrt(fdiff) / norm2(g));
    }
    return {eq <= kKrasulinaTol && fd <= kFdTol,
            fmt::format("-grad vs (2/|p|^2) bracket {:.2e} <= {:.0e}, finite differences {:.2e} <= {:.0e}", eq,
                        kKrasulinaTol, fd, kFdTol)};
}

Outcome kpca() {
    const auto t0 = std::chrono::steady_clock::now();
    std::size_t runs = 0, passed = 0;
    double min_margin = INFINITY;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(500 + seed);
        const Matrix l = gaussian_matrix(6, 6, rng);
        const Matrix sigma = symmetrize(matmul_transpose(l, l));
        for (std::size_t k : {1, 2, 3}) {
            const KpcaReport r = kpca_bruteforce_check(sigma, k, 1000, seed);
            ++runs;
            passed += r.passed();
            min_margin = std::min(min_margin, r.best_random_objective - r.optimal_objective);
        }
    }
    const double t = seconds_since(t0);
    return {passed == runs && t <= kKpcaBudget,
            fmt::format("{}/{} (seed, k) runs won against 1000 frames, min margin {:.3e}, {:.2f}s <= {:.0f}s", passed,
                        runs, min_margin, t, kKpcaBudget)};
}

Outcome streaming_pca() {
    bool ok = true;
    std::string hits;
    for (std::uint64_t seed : {0, 1, 2}) {
        PcaStreamConfig c;
        c.seed = seed;
        c.steps = kPcaSteps;
        const PcaTrace t = run_streaming_pca(c, kAlignment);
        ok = ok && t.oja_hit <= kPcaSteps && t.krasulina_hit <= kPcaSteps;
        hits += fmt::format(" seed {}: Oja {} Krasulina {};", seed, t.oja_hit, t.krasulina_hit);
    }
    return {ok, fmt::format("first step with |alignment| >= {} (limit {}):{}", kAlignment, kPcaSteps, hits)};
}

Outcome quasi_orthogonality_bound() {
    Rng rng(800);
    double slack = -INFINITY, tangency = 0;
    for (int t = 0; t < 1000; ++t) {
        const std::size_t f = 16;
        const std::size_t k = 1 + static_cast<std::size_t>(rng.uniform() * (f - 1));
        const Matrix q = random_orthonormal(f, k, rng);
        const double eps = std::pow(10.0, -4.0 + 4.0 * rng.uniform());
        const Matrix p = matmul_transpose(q, q) + gaussian_matrix(f, f, rng, eps);
        const QuasiOrthoReport r = quasi_orthogonality(p);
        slack = std::max(slack, r.eps_orth - (r.eps_proj + r.op_norm * r.eps_sym));
    }
    for (int t = 0; t < 1000; ++t) {
        const std::size_t f = 16;
        const std::size_t k = 1 + static_cast<std::size_t>(rng.uniform() * f);
        const Matrix frame = random_orthonormal(f, k, rng);
        const Matrix m = transpose_matmul(frame, riemannian_grad(gaussian_matrix(f, k, rng), frame));
        tangency = std::max(tangency, frobenius_norm(m + m.transpose()));
    }
    return {slack <= kQuasiTol && tangency <= kQuasiTol,
            fmt::format("max eps_orth - (eps_proj + |P| eps_sym) {:.2e} <= {:.0e}, max |P^T R + R^T P|_F {:.2e} <= {:.0e}",
                        slack, kQuasiTol, tangency, kQuasiTol)};
}

Outcome non_collapse() {
    bool ok = true;
    std::string detail;
    double slowest = 0;
    for (std::uint64_t seed : {0, 1, 2}) {
        TrainConfig c;
        c.seed = seed;
        auto t0 = std::chrono::steady_clock::now();
        const TrainLog log = train_byol(c).log;
        slowest = std::max(slowest, seconds_since(t0));
        c.ablate_stop_gradient = true;
        t0 = std::chrono::steady_clock::now();
        const TrainLog ablated = train_byol(c).log;
        slowest = std::max(slowest, seconds_since(t0));

        std::vector<double> x, y;
        for (const TrainRecord& r : log.records) {
            x.push_back(static_cast<double>(r.step));
            y.push_back(r.pred_srank);
        }
        const double srank = log.records.back().latent_srank;
        const double ab = ablated.records.back().latent_srank;
        const double slope = regression_slope(x, y);
        ok = ok && srank >= kSrankFloor && slope > 0 && ab < srank;
        detail += fmt::format(" seed {}: latent srank {:.3f}, ablated {:.3f}, pred srank slope {:.2e};", seed, srank,
                              ab, slope);
    }
    ok = ok && slowest <= kTrainBudget;
    return {ok, fmt::format("floor {}, slowest run {:.1f}s <= {:.0f}s:{}", kSrankFloor, slowest, kTrainBudget, detail)};
}

Outcome golden() {
    const fs::path golden = ORTHOPRED_GOLDEN_DIR;
    const fs::path scratch = fs::temp_directory_path() / "orthopred_acceptance";
    bool ok = true;
    for (int rep = 0; rep < 2; ++rep) {
        const fs::path out = scratch / std::to_string(rep);
        fs::remove_all(out);
        std::ostringstream sink;
        ok = ok && run_cli({"train", "--config", (golden / "smoke.cfg").string(), "--out", out.string()}, sink, sink) ==
                       kExitPass;
        for (const char* f : {"train.csv", "histogram.csv"})
            ok = ok && fs::exists(out / f) && read_text_file(out / f) == read_text_file(golden / f);
    }
    return {ok, "two fixed-seed 100-step runs against tests/golden/{train,histogram}.csv, bytewise"};
}

} // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"square-root oracle equivalence", square_roots},
        {"Stiefel projection", stiefel},
        {"LRP orthogonal projection", lrp_projection},
        {"predictor to identity", predictor_to_identity},
        {"Krasulina equivalence", krasulina_equivalence},
        {"k-PCA brute force", kpca},
        {"streaming 1-PCA", streaming_pca},
        {"quasi-orthogonality bound", quasi_orthogonality_bound},
        {"non-collapse and rank growth", non_collapse},
        {"determinism and golden files", golden},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, fmt::format("threw: {}", e.what())};
        }
        failures += !o.pass;
        fmt::print("{:>2} {} {}: {} [{:.2f}s]\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first, o.detail,
                   seconds_since(t0));
        std::fflush(stdout);
    }
    fmt::print("{} of {} criteria passed\n", criteria.size() - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
