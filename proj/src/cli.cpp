#include "orthopred/cli.hpp"

#include "orthopred/diagnostics.hpp"
#include "orthopred/errors.hpp"
#include "orthopred/matfun.hpp"
#include "orthopred/predictors.hpp"
#include "orthopred/random.hpp"
#include "orthopred/riemann.hpp"
#include "orthopred/streampca.hpp"
#include "orthopred/trainer.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <ostream>
#include <set>

namespace orthopred {

std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

using json = nlohmann::json;
using Entries = std::vector<std::pair<std::string, std::string>>;

// Typed view of a flat key/value config. Every lookup records the resolved
// value (default or explicit) for the config echo; finish() rejects keys that
// no lookup asked for.
class Settings {
public:
    explicit Settings(const Entries& entries) {
        for (const auto& [k, v] : entries) values_[k] = v;
    }

    std::string text(const std::string& key, const std::string& def) {
        const auto it = values_.find(key);
        std::string v = it == values_.end() ? def : it->second;
        echo_[key] = v;
        return v;
    }

    double real(const std::string& key, double def) {
        const auto it = values_.find(key);
        double x = def;
        if (it != values_.end()) {
            const std::string& v = it->second;
            const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
            if (v.empty() || ec != std::errc{} || p != v.data() + v.size())
                throw ConfigError(fmt::format("config key '{}': invalid value '{}' (expected a real number)", key, v));
        }
        echo_[key] = format_real(x);
        return x;
    }

    std::uint64_t count(const std::string& key, std::uint64_t def) {
        const auto it = values_.find(key);
        std::uint64_t x = def;
        if (it != values_.end()) {
            const std::string& v = it->second;
            const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
            if (v.empty() || ec != std::errc{} || p != v.data() + v.size())
                throw ConfigError(
                    fmt::format("config key '{}': invalid value '{}' (expected a non-negative integer)", key, v));
        }
        echo_[key] = std::to_string(x);
        return x;
    }

    void finish() const {
        for (const auto& [k, v] : values_)
            if (!echo_.contains(k)) throw ConfigError(fmt::format("unknown config key '{}'", k));
    }

    const std::map<std::string, std::string>& echo() const { return echo_; }

private:
    std::map<std::string, std::string> values_;
    std::map<std::string, std::string> echo_;
};

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

std::string canonical_text(const std::map<std::string, std::string>& echo) {
    std::string out;
    for (const auto& [k, v] : echo) out += fmt::format("{} = {}\n", k, v);
    return out;
}

struct Report {
    bool pass = true;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> config;
    std::string config_text;
    json metrics = json::object();
    std::vector<std::pair<std::string, std::string>> files;  // relative path, contents
    std::vector<std::string> lines;                          // human-readable results
};

Report settings_report(const Settings& s, std::uint64_t seed) {
    s.finish();
    Report r;
    r.seed = seed;
    r.config = s.echo();
    r.config_text = canonical_text(r.config);
    return r;
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

// ---------------------------------------------------------------------------
// sqrt-bench
// ---------------------------------------------------------------------------

Vector family_spectrum(const std::string& family, std::size_t f, double cond, Rng& rng) {
    if (family == "logspaced") return log_spaced(1.0, 1.0 / cond, f);
    if (family == "identity") return Vector(f, 1.0);
    Vector ev(f);
    for (double& l : ev) l = 1.0 / cond + (1.0 - 1.0 / cond) * rng.uniform();
    return ev;
}

Report cmd_sqrt_bench(Settings& s) {
    const std::string family = s.text("family", "logspaced");
    const std::size_t f = s.count("f", 64);
    const double cond = s.real("cond", 100.0);
    const std::size_t matrices = s.count("matrices", 1);
    const std::size_t ns_iters = s.count("ns_iters", 25);
    const std::size_t ns2_iters = s.count("ns2_iters", 25);
    const std::size_t visser_iters = s.count("visser_iters", 500);
    const std::size_t stiefel_iters = s.count("stiefel_iters", 25);
    const std::string visser_eta_text = s.text("visser_eta", "auto");
    const double tol_ns = s.real("tol_ns", 1e-6);
    const double tol_visser = s.real("tol_visser", 1e-3);
    const double tol_ns2 = s.real("tol_ns2", 1e-4);
    const double tol_stiefel = s.real("tol_stiefel", 1e-4);
    const std::uint64_t seed = s.count("seed", 0);
    Report rep = settings_report(s, seed);

    require(family == "logspaced" || family == "uniform" || family == "identity",
            "config key 'family': expected logspaced, uniform or identity");
    require(f >= 1, "config key 'f': must be at least 1");
    require(std::isfinite(cond) && cond >= 1.0, "config key 'cond': must be >= 1");
    require(matrices >= 1, "config key 'matrices': must be at least 1");
    require(ns_iters >= 1 && ns2_iters >= 1 && visser_iters >= 1 && stiefel_iters >= 1,
            "iteration counts must be at least 1");
    double fixed_eta = 0.0;
    if (visser_eta_text != "auto") {
        Settings one({{"visser_eta", visser_eta_text}});
        fixed_eta = one.real("visser_eta", 0.0);
        require(fixed_eta > 0.0 && std::isfinite(fixed_eta), "config key 'visser_eta': must be positive or auto");
    }

    struct Method {
        const char* name;
        const char* metric;
        double tol;
        double worst = 0.0;
        bool diverged = false;
    };
    Method ns{"NS", "ba_minus_identity", tol_ns};
    Method visser{"Visser", "p2_minus_sigma", tol_visser};
    Method ns2{"NS2", "fourth_root_rel_error", tol_ns2};
    Method stiefel{"Stiefel", "singular_value_spread", tol_stiefel};

    std::string csv = "method,matrix,iteration,metric,value\n";
    const auto row = [&csv](const Method& m, std::size_t mat, std::size_t k, double v) {
        csv += fmt::format("{},{},{},{},{}\n", m.name, mat, k, m.metric, format_real(v));
    };

    Rng rng(seed);
    for (std::size_t mat = 0; mat < matrices; ++mat) {
        const Vector ev = family_spectrum(family, f, cond, rng);
        const Matrix sigma = random_spd_with_spectrum(ev, rng);
        const Matrix exact = sqrt_eig(sigma);
        const Matrix fourth = spectral_power(sigma, 0.25);

        ResidualTrace tr;
        const NsPair pair = newton_schulz_sqrt(sigma, ns_iters, &tr);
        for (std::size_t i = 0; i < tr.size(); ++i) row(ns, mat, tr.iteration[i], tr.residual[i]);
        ns.worst = std::max(ns.worst, frobenius_norm(pair.sqrt_estimate() - exact) / frobenius_norm(exact));

        SqrtIterConfig vc;
        vc.n_iters = visser_iters;
        vc.visser_eta = fixed_eta > 0.0 ? fixed_eta : 0.5 / operator_norm(sigma);
        ResidualTrace vt;
        try {
            const Matrix p = visser_sqrt(sigma, vc, &vt);
            visser.worst = std::max(visser.worst, frobenius_norm(p - exact) / frobenius_norm(exact));
        } catch (const DivergenceError& e) {
            visser.diverged = true;
            visser.worst = std::numeric_limits<double>::infinity();
            rep.lines.push_back(fmt::format("Visser diverged on matrix {}: {}", mat, e.what()));
        }
        for (std::size_t i = 0; i < vt.size(); ++i) row(visser, mat, vt.iteration[i], vt.residual[i]);

        double err = 0.0;
        for (std::size_t k = 1; k <= ns2_iters; ++k) {
            err = frobenius_norm(ns_squared_sqrt(sigma, k) - fourth) / frobenius_norm(fourth);
            row(ns2, mat, k, err);
        }
        ns2.worst = std::max(ns2.worst, err);

        double spread = 0.0;
        for (std::size_t k = 1; k <= stiefel_iters; ++k) {
            const Vector sv = singular_values(stiefel_project(sigma, k).scaled_projection);
            spread = (sv.front() - sv.back()) / sv.front();
            row(stiefel, mat, k, spread);
        }
        stiefel.worst = std::max(stiefel.worst, spread);
    }

    for (const Method* m : {&ns, &visser, &ns2, &stiefel}) {
        const bool ok = !m->diverged && m->worst <= m->tol;
        rep.pass = rep.pass && ok;
        rep.metrics[m->name] = {{"max_terminal_error", finite_or_null(m->worst)},
                                {"tolerance", m->tol},
                                {"diverged", m->diverged},
                                {"pass", ok}};
        rep.lines.push_back(fmt::format("{:8} max terminal error {:.3e} (tol {:.0e}) {}", m->name, m->worst, m->tol,
                                        ok ? "pass" : "FAIL"));
    }
    rep.files.emplace_back("residuals.csv", std::move(csv));
    return rep;
}

// ---------------------------------------------------------------------------
// predictor-eval
// ---------------------------------------------------------------------------

Report cmd_predictor_eval(Settings& s) {
    const std::size_t b = s.count("b", 64);
    const std::size_t f = s.count("f", 16);
    const double power = s.real("spectrum_power", 1.0);
    const double noise = s.real("noise", 0.0);
    const double lrp_tol = s.real("lrp_tol", 1e-8);
    const std::uint64_t seed = s.count("seed", 0);
    Report rep = settings_report(s, seed);
    require(f >= 1 && b >= f, "predictor-eval needs b >= f >= 1");
    require(std::isfinite(noise) && noise >= 0.0, "config key 'noise': must be >= 0");

    Rng rng(seed);
    Matrix z = gaussian_matrix(b, f, rng);
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < f; ++j) z(i, j) *= std::pow(static_cast<double>(j + 1), -power / 2);
    Matrix zt = z;
    if (noise > 0.0) zt += gaussian_matrix(b, f, rng, noise);

    std::vector<std::pair<PredictorKind, Matrix>> preds;
    std::string csv = "kind,srank,trace,dist_polar,dist_identity,eps_proj,eps_sym,eps_orth,op_norm\n";
    for (PredictorKind kind : kAllPredictorKinds) {
        Matrix p = compute_predictor(kind, z, zt, PredictorParams::defaults_for(kind));
        const SpectrumDiagnostics d = spectrum_diagnostics(p, 0);
        const double dist_id = frobenius_norm(add_identity(p, -1.0));
        csv += fmt::format("{},{},{},{},{},{},{},{},{}\n", predictor_name(kind), format_real(d.srank),
                           format_real(d.trace), format_real(d.dist_polar), format_real(dist_id),
                           format_real(d.quasi.eps_proj), format_real(d.quasi.eps_sym), format_real(d.quasi.eps_orth),
                           format_real(d.quasi.op_norm));
        rep.metrics["predictors"][std::string(predictor_name(kind))] = {
            {"srank", d.srank}, {"trace", d.trace}, {"dist_polar", d.dist_polar}, {"dist_identity", dist_id}};
        preds.emplace_back(kind, std::move(p));
    }

    std::string pairs = "kind_a,kind_b,distance\n";
    for (std::size_t i = 0; i < preds.size(); ++i)
        for (std::size_t j = i + 1; j < preds.size(); ++j)
            pairs += fmt::format("{},{},{}\n", predictor_name(preds[i].first), predictor_name(preds[j].first),
                                 format_real(frobenius_norm(preds[i].second - preds[j].second)));

    const double lrp_dist = rep.metrics["predictors"]["LRP"]["dist_identity"].get<double>();
    if (noise == 0.0) {
        rep.pass = lrp_dist <= lrp_tol;
        rep.metrics["lrp_identity_check"] = {{"distance", lrp_dist}, {"tolerance", lrp_tol}, {"pass", rep.pass}};
        rep.lines.push_back(fmt::format("LRP distance to identity {:.3e} (tol {:.0e}) {}", lrp_dist, lrp_tol,
                                        rep.pass ? "pass" : "FAIL"));
    }
    for (const auto& [kind, p] : preds)
        rep.lines.push_back(fmt::format("{:10} srank {:.4f} dist_identity {:.4e}", predictor_name(kind),
                                        stable_rank(p), frobenius_norm(add_identity(p, -1.0))));
    rep.files.emplace_back("predictors.csv", std::move(csv));
    rep.files.emplace_back("pairwise.csv", std::move(pairs));
    return rep;
}

// ---------------------------------------------------------------------------
// pca-demo
// ---------------------------------------------------------------------------

Report cmd_pca_demo(Settings& s) {
    PcaStreamConfig cfg;
    const std::size_t f = s.count("f", cfg.spectrum.size());
    const double top = s.real("top", cfg.spectrum.front());
    cfg.k = s.count("k", cfg.k);
    cfg.eta = s.real("eta", cfg.eta);
    cfg.frame_eta = s.real("frame_eta", cfg.frame_eta);
    cfg.steps = s.count("steps", cfg.steps);
    cfg.batch = s.count("batch", cfg.batch);
    cfg.log_interval = s.count("log_interval", cfg.log_interval);
    const double threshold = s.real("threshold", 0.99);
    cfg.seed = s.count("seed", 0);
    Report rep = settings_report(s, cfg.seed);
    require(f >= 2, "config key 'f': must be at least 2");
    require(top > 1.0 && std::isfinite(top), "config key 'top': the leading eigenvalue must exceed 1");
    require(cfg.k >= 1 && cfg.k <= f, "config key 'k': must lie in [1, f]");
    require(cfg.eta > 0.0 && cfg.frame_eta > 0.0, "step sizes must be positive");
    require(cfg.batch >= 1 && cfg.log_interval >= 1, "batch and log_interval must be at least 1");
    cfg.spectrum.assign(f, 1.0);
    cfg.spectrum.front() = top;

    const PcaTrace trace = run_streaming_pca(cfg, threshold);
    std::string csv = "step,oja_alignment,krasulina_alignment,principal_angle_topk,objective\n";
    for (const PcaRecord& r : trace.records)
        csv += fmt::format("{},{},{},{},{}\n", r.step, format_real(r.oja_alignment), format_real(r.krasulina_alignment),
                           format_real(r.principal_angle_topk), format_real(r.objective));

    const auto hit = [&](std::size_t h) { return h <= cfg.steps ? json(h) : json(nullptr); };
    rep.pass = trace.oja_hit <= cfg.steps && trace.krasulina_hit <= cfg.steps;
    rep.metrics = {{"threshold", threshold},
                   {"oja_hit_step", hit(trace.oja_hit)},
                   {"krasulina_hit_step", hit(trace.krasulina_hit)}};
    if (!trace.records.empty()) {
        const PcaRecord& last = trace.records.back();
        rep.metrics["final_oja_alignment"] = last.oja_alignment;
        rep.metrics["final_krasulina_alignment"] = last.krasulina_alignment;
        rep.metrics["final_principal_angle_topk"] = last.principal_angle_topk;
    }
    const auto hit_text = [&](std::size_t h) { return h <= cfg.steps ? std::to_string(h) : std::string("never"); };
    rep.lines.push_back(fmt::format("Oja reached {} at step {}", threshold, hit_text(trace.oja_hit)));
    rep.lines.push_back(fmt::format("Krasulina reached {} at step {}", threshold, hit_text(trace.krasulina_hit)));
    rep.files.emplace_back("pca.csv", std::move(csv));
    return rep;
}

// ---------------------------------------------------------------------------
// quasi-ortho
// ---------------------------------------------------------------------------

Report cmd_quasi_ortho(Settings& s) {
    const std::size_t f = s.count("f", 16);
    const std::size_t k = s.count("k", 8);
    const double eps = s.real("eps", 0.0);
    const std::size_t trials = s.count("trials", 1);
    const double tol = s.real("tol", 1e-10);
    const std::uint64_t seed = s.count("seed", 0);
    Report rep = settings_report(s, seed);
    require(f >= 1 && k <= f, "quasi-ortho needs 0 <= k <= f");
    require(std::isfinite(eps) && eps >= 0.0, "config key 'eps': must be >= 0");

    Rng rng(seed);
    std::string csv = "trial,eps_proj,eps_sym,eps_orth,op_norm,bound,bound_ok,tangency\n";
    double worst_slack = -std::numeric_limits<double>::infinity(), worst_tangency = 0.0;
    std::size_t violations = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        const Matrix q = random_orthonormal(f, k, rng);
        Matrix p = matmul_transpose(q, q);
        if (eps > 0.0) p += gaussian_matrix(f, f, rng, eps / std::sqrt(static_cast<double>(f)));
        const QuasiOrthoReport r = quasi_orthogonality(p);
        const double bound = r.eps_proj + r.op_norm * r.eps_sym;
        const bool ok = r.eps_orth <= bound + tol;

        const Matrix frame = random_orthogonal(f, rng);
        const Matrix rg = riemannian_grad(gaussian_matrix(f, f, rng), frame);
        const Matrix m = transpose_matmul(frame, rg);
        const double tangency = frobenius_norm(m + m.transpose());

        violations += !ok || tangency > tol;
        worst_slack = std::max(worst_slack, r.eps_orth - bound);
        worst_tangency = std::max(worst_tangency, tangency);
        csv += fmt::format("{},{},{},{},{},{},{},{}\n", t, format_real(r.eps_proj), format_real(r.eps_sym),
                           format_real(r.eps_orth), format_real(r.op_norm), format_real(bound), ok ? 1 : 0,
                           format_real(tangency));
        if (t == 0) {
            rep.metrics["first"] = {{"eps_proj", r.eps_proj}, {"eps_sym", r.eps_sym}, {"eps_orth", r.eps_orth},
                                    {"op_norm", r.op_norm}};
        }
    }
    rep.pass = violations == 0;
    rep.metrics["trials"] = trials;
    rep.metrics["violations"] = violations;
    rep.metrics["max_eps_orth_minus_bound"] = trials ? json(worst_slack) : json(nullptr);
    rep.metrics["max_tangency"] = worst_tangency;
    rep.lines.push_back(fmt::format("{} trials, {} violations, max tangency {:.3e}", trials, violations, worst_tangency));
    rep.files.emplace_back("quasi.csv", std::move(csv));
    return rep;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

json train_metrics(const TrainLog& log) {
    json m = json::object();
    m["records"] = log.records.size();
    if (log.records.empty()) return m;
    const TrainRecord& last = log.records.back();
    m["final_step"] = last.step;
    m["final_loss"] = finite_or_null(last.loss);
    m["final_latent_srank"] = last.latent_srank;
    m["final_pred_srank"] = last.pred_srank;
    m["final_pred_trace"] = last.pred_trace;
    m["final_dist_polar"] = last.dist_polar;
    m["final_balancing_res"] = last.balancing_res;
    m["final_decorrelation_res"] = last.decorrelation_res;
    for (const TrainRecord& r : log.records)
        if (r.step == 10) m["loss_at_step_10"] = finite_or_null(r.loss);
    if (log.records.size() >= 2) {
        std::vector<double> x, y;
        for (const TrainRecord& r : log.records) {
            x.push_back(static_cast<double>(r.step));
            y.push_back(r.pred_srank);
        }
        m["pred_srank_slope"] = regression_slope(x, y);
    }
    return m;
}

// One run into `dir` (relative to --out). Returns false when training aborted.
bool train_into(const TrainConfig& cfg, const std::string& dir, Report& rep, json& metrics) {
    TrainLog log;
    bool ok = true;
    try {
        log = train_byol(cfg).log;
    } catch (const TrainingAborted& e) {
        log = e.last_good_log();
        ok = false;
        metrics["abort"] = {{"step", e.step()}, {"message", e.what()}};
        rep.lines.push_back(e.what());
    }
    json m = train_metrics(log);
    m["aborted"] = !ok;
    metrics.update(m);
    rep.files.emplace_back(dir + "train.csv", format_train_csv(log));
    rep.files.emplace_back(dir + "histogram.csv", format_histogram_csv(log));
    return ok;
}

inline constexpr double kRidgeGrid[] = {0.0, 0.15, 0.3, 0.45, 0.6, 0.75, 0.9};

Report cmd_train(const Entries& entries, bool ridge_sweep) {
    std::string text;
    for (const auto& [k, v] : entries) text += fmt::format("{} = {}\n", k, v);
    TrainConfig cfg = parse_train_config(text);
    cfg.validate();

    Report rep;
    rep.seed = cfg.seed;
    rep.config = config_entries(cfg);
    rep.config_text = config_to_text(cfg);
    rep.config["ridge_sweep"] = ridge_sweep ? "true" : "false";

    if (!ridge_sweep) {
        rep.pass = train_into(cfg, "", rep, rep.metrics);
        if (const auto& m = rep.metrics; m.contains("final_loss"))
            rep.lines.push_back(fmt::format("steps {} loss {} latent srank {:.4f} predictor srank {:.4f}",
                                            m["final_step"].get<std::size_t>(), m["final_loss"].dump(),
                                            m["final_latent_srank"].get<double>(),
                                            m["final_pred_srank"].get<double>()));
        return rep;
    }
    rep.config_text += "ridge_sweep = true\n";
    rep.metrics["sweep"] = json::array();
    for (double alpha : kRidgeGrid) {
        TrainConfig c = cfg;
        c.predictor_params.ridge_alpha = alpha;
        json m = {{"ridge_alpha", alpha}};
        rep.pass = train_into(c, fmt::format("alpha_{:.2f}/", alpha), rep, m) && rep.pass;
        if (m.contains("final_latent_srank"))
            rep.lines.push_back(fmt::format("alpha {:.2f}: loss {} latent srank {:.4f} predictor srank {:.4f}", alpha,
                                            m["final_loss"].dump(), m["final_latent_srank"].get<double>(),
                                            m["final_pred_srank"].get<double>()));
        rep.metrics["sweep"].push_back(std::move(m));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

struct CommonOptions {
    std::string config;
    std::uint64_t seed = 0;
    std::string out = "out";
    std::string format = "csv";
    std::vector<std::string> sets;
    bool ridge_sweep = false;
};

void add_common(CLI::App* sub, CommonOptions& o) {
    sub->add_option("--config", o.config, "flat 'key = value' config file");
    sub->add_option("--seed", o.seed, "overrides the config seed");
    sub->add_option("--out", o.out, "output directory")->capture_default_str();
    sub->add_option("--format", o.format, "csv or json-summary")
        ->check(CLI::IsMember({"csv", "json-summary"}))
        ->capture_default_str();
    sub->add_option("--set", o.sets, "key=value override (repeatable)")->allow_extra_args(false);
}

Entries gather_entries(const CommonOptions& o, const CLI::App& sub) {
    Entries e;
    if (!o.config.empty()) e = parse_key_value_text(read_text_file(o.config));
    for (const std::string& kv : o.sets) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError(fmt::format("--set expects key=value, got '{}'", kv));
        Entries one = parse_key_value_text(kv.substr(0, eq) + " = " + kv.substr(eq + 1));
        e.insert(e.end(), one.begin(), one.end());
    }
    if (sub.get_option("--seed")->count() > 0) e.emplace_back("seed", std::to_string(o.seed));
    return e;
}

json summary_json(const std::string& command, const Report& rep) {
    json config = json::object();
    for (const auto& [k, v] : rep.config) config[k] = v;
    return {{"tool", "orthopred"},
            {"version", std::string(kToolVersion)},
            {"command", command},
            {"seed", rep.seed},
            {"config_hash", fmt::format("fnv1a64:{:016x}", fnv1a64(rep.config_text))},
            {"config", std::move(config)},
            {"status", rep.pass ? "pass" : "fail"},
            {"metrics", rep.metrics}};
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"orthopred: closed-form predictor experiments", "orthopred"};
    app.require_subcommand(1, 1);
    app.set_version_flag("--version", std::string(kToolVersion));

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"sqrt-bench", "matrix square-root iterations against the eigendecomposition"},
        {"predictor-eval", "every closed-form predictor on one synthetic batch"},
        {"pca-demo", "streaming Oja, Krasulina and matrix Krasulina"},
        {"train", "two-branch self-predictive training run"},
        {"quasi-ortho", "quasi-orthogonality bound and Riemannian tangency"},
    };
    CommonOptions opts;
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        add_common(sub, opts);
        if (name == "train") sub->add_flag("--ridge-sweep", opts.ridge_sweep, "sweep ridge alpha over 0..0.9");
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitPass : kExitUsage;
    }
    const CLI::App* sub = app.get_subcommands().front();
    const std::string command = sub->get_name();

    bool reading = true;
    try {
        const Entries entries = gather_entries(opts, *sub);
        reading = false;
        Report rep;
        if (command == "train") {
            rep = cmd_train(entries, opts.ridge_sweep);
        } else {
            Settings s(entries);
            if (command == "sqrt-bench") rep = cmd_sqrt_bench(s);
            else if (command == "predictor-eval") rep = cmd_predictor_eval(s);
            else if (command == "pca-demo") rep = cmd_pca_demo(s);
            else rep = cmd_quasi_ortho(s);
        }

        const std::filesystem::path dir(opts.out);
        const json summary = summary_json(command, rep);
        if (opts.format == "csv") {
            for (const auto& [name, contents] : rep.files) write_text_file(dir / name, contents);
            for (const std::string& line : rep.lines) out << line << '\n';
            out << command << ": " << (rep.pass ? "pass" : "FAIL") << '\n';
        } else {
            out << summary.dump(2) << '\n';
        }
        write_text_file(dir / "summary.json", summary.dump(2) + "\n");
        return rep.pass ? kExitPass : kExitFailure;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return reading ? kExitUsage : kExitFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

} // namespace orthopred
