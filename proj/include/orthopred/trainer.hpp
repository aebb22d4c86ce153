#pragma once

// Two-branch self-predictive training of a linear encoder with closed-form
// predictors, on a synthetic low-rank data model.

#include "orthopred/diagnostics.hpp"
#include "orthopred/errors.hpp"
#include "orthopred/linalg.hpp"
#include "orthopred/predictors.hpp"
#include "orthopred/random.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace orthopred {

struct SyntheticDataSpec {
    std::size_t latent_rank = 0;
    Matrix mixing;          // d×r, orthonormal columns
    Vector source_spectrum; // r positive variances
    double obs_noise = 0.0;

    // mixing = random_orthonormal(d, r, rng), spectrum λ_i = i^{-power}.
    static SyntheticDataSpec make(std::size_t d, std::size_t r, double spectrum_power, double obs_noise, Rng& rng);
    std::size_t dim() const noexcept { return mixing.rows(); }
    // mixing·diag(spectrum)·mixingᵀ + obs_noise²·I.
    Matrix population_covariance() const;
};

struct Augmentation {
    double noise_sigma = 0.0;
    double mask_prob = 0.0;
};

// b raw inputs o = mixing·s + obs_noise·g, two views each: coordinates are
// zeroed with probability mask_prob, then isotropic noise of scale
// noise_sigma is added, independently per view.
std::pair<Matrix, Matrix> sample_batch(const SyntheticDataSpec& spec, std::size_t b, const Augmentation& aug,
                                       Rng& rng);

// E[xxᵀ] for one view: (1−m)²C + m(1−m)·diag(C) + σ²I with C the population
// covariance.
Matrix view_covariance(const SyntheticDataSpec& spec, const Augmentation& aug);

// normalized = false: ‖ZP − Z'‖²_F.
// normalized = true: Σᵢ ‖zᵢP/‖zᵢP‖ − z'ᵢ/‖z'ᵢ‖‖². Throws DomainError on a zero row.
double byol_loss(const Matrix& z_on, const Matrix& z_tg, const Matrix& p, bool normalized);

// Gradient of byol_loss with respect to A for Z = XA, with Z' and P held
// constant: 2Xᵀ(XAP − Z')Pᵀ in the unnormalised case.
Matrix encoder_grad(const Matrix& x, const Matrix& z_tg, const Matrix& p, const Matrix& a_online,
                    bool normalized);

// Gradient of byol_loss with respect to Z' (used when the target branch is
// not stopped): −2(ZP − Z') unnormalised.
Matrix target_latent_grad(const Matrix& z_on, const Matrix& z_tg, const Matrix& p, bool normalized);

// A − lr·(grad + λA).
Matrix sgd_update(const Matrix& a, const Matrix& grad, double lr, double weight_decay);

// (‖AᵀA − PᵀP‖_F / max(‖AᵀA‖_F, 1e-12), ‖AᵀA − I‖_F / √f).
std::pair<double, double> balancing_check(const Matrix& a_online, const Matrix& p);

struct TrainConfig {
    std::size_t d = 32;
    std::size_t f = 16;
    std::size_t b = 64;
    std::size_t steps = 5000;
    double lr = 0.001;
    double weight_decay = 0.0;
    double tau_target = 0.99;
    PredictorKind predictor = PredictorKind::NS;
    PredictorParams predictor_params = PredictorParams::defaults_for(PredictorKind::NS);
    bool loss_normalized = false;
    std::uint64_t seed = 0;
    double aug_noise_sigma = 0.02;
    double aug_mask_prob = 0.0;
    std::size_t latent_rank = 32;
    double spectrum_power = 1.0;
    double obs_noise = 0.0;
    double init_scale = 3.5;
    bool ablate_stop_gradient = false;
    bool ablate_target_ema = false;
    std::size_t log_interval = 10;

    // Throws ConfigError naming the offending field.
    void validate() const;
};

struct BranchWeights {
    Matrix a_online;
    Matrix a_target;
};

struct TrainResult {
    TrainLog log;
    BranchWeights weights;
    Matrix predictor;
};

// Raised when a weight or the loss stops being finite. Carries the step and
// everything logged before it.
class TrainingAborted : public NumericError {
public:
    TrainingAborted(const std::string& what, std::size_t step, TrainLog log)
        : NumericError(Verbatim{}, what, step), log_(std::move(log)) {}
    std::size_t step() const noexcept { return iteration(); }
    const TrainLog& last_good_log() const noexcept { return log_; }

private:
    TrainLog log_;
};

// The data model and initial online weights (init_scale · N(0, 1/d)
// entries) drawn from the run seed, exactly as train_byol draws them.
SyntheticDataSpec make_data_spec(const TrainConfig& cfg);
Matrix initial_weights(const TrainConfig& cfg);

TrainResult train_byol(const TrainConfig& cfg);

// `key = value` lines in order, with blank lines and '#' comments dropped.
// Throws ConfigError naming the line number of a line without '='.
std::vector<std::pair<std::string, std::string>> parse_key_value_text(std::string_view text);

// Flat `key = value` configuration. Keys are the TrainConfig field names plus
// the predictor parameter names (ridge_alpha, ema_rho, n_iters, visser_eta,
// pinv_cutoff, spectral_normalize, direct_batch_scaled). `predictor` resets
// the predictor parameters to that kind's defaults before any explicit
// parameter is applied. Blank lines and '#' comments are ignored.
TrainConfig parse_train_config(std::string_view text);
// Apply one key; throws ConfigError naming the key for unknown keys or bad values.
void set_config_value(TrainConfig& cfg, std::string_view key, std::string_view value);
// Canonical rendering, parseable by parse_train_config.
std::string config_to_text(const TrainConfig& cfg);
// Key/value view of config_to_text.
std::map<std::string, std::string> config_entries(const TrainConfig& cfg);

} // namespace orthopred
