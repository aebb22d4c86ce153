#pragma once

// Closed-form batchwise predictors, ridge, and the predictor EMA.

#include "orthopred/linalg.hpp"
#include "orthopred/matfun.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace orthopred {

enum class PredictorKind { LRP, DirectPred, DirectCopy, NE, Visser, NS, NS2, Stiefel };

inline constexpr std::array<PredictorKind, 8> kAllPredictorKinds{
    PredictorKind::LRP, PredictorKind::DirectPred, PredictorKind::DirectCopy, PredictorKind::NE,
    PredictorKind::Visser, PredictorKind::NS, PredictorKind::NS2, PredictorKind::Stiefel};

std::string_view predictor_name(PredictorKind kind);
// Exact, case-sensitive match on the names above; throws ConfigError.
PredictorKind parse_predictor_kind(std::string_view name);

// True for the kinds whose formula reads the target latents.
bool needs_target(PredictorKind kind);

inline constexpr std::size_t kDefaultVisserIters = 50;

struct PredictorParams {
    double ridge_alpha = 0.0;
    double ema_rho = 0.0;
    SqrtIterConfig sqrt_cfg;
    double pinv_cutoff = kDefaultPinvCutoff;
    bool spectral_normalize = false;
    // Apply the 1/b covariance factor to DirectPred and DirectCopy as well.
    bool direct_batch_scaled = false;

    // Per-kind defaults: EMA ρ and iteration count.
    static PredictorParams defaults_for(PredictorKind kind);
    // Throws ConfigError on out-of-range fields.
    void validate() const;
};

// Factor applied to ZᵀZ to form the covariance fed to a square-root formula:
// 1/b for Visser, NS and NS2 (and for the direct kinds when switched on),
// 1 otherwise.
double covariance_scale(PredictorKind kind, std::size_t batch, const PredictorParams& params);

// pinv(Z/c)·(Z'/c), c = ½‖Z‖_F + ½‖Z'‖_F + 1e-12.
Matrix lrp_predictor(const Matrix& z_on, const Matrix& z_tg, double cutoff = kDefaultPinvCutoff);

// 2ZᵀZ' − ZᵀZZᵀZ' on the latents as given: (ZᵀZ)⁻¹ZᵀZ' with the inverse
// replaced by its first-order Neumann expansion 2I − ZᵀZ.
Matrix ne_formula(const Matrix& z_on, const Matrix& z_tg);
// ne_formula on Z/|||Z||| and Z'/|||Z'|||, divided by its operator norm.
Matrix ne_predictor(const Matrix& z_on, const Matrix& z_tg);

// Dispatch over the catalogue. z_tg may be empty for kinds that ignore it.
// Throws DomainError when LRP or NE is given no target batch.
Matrix compute_predictor(PredictorKind kind, const Matrix& z_on, const Matrix& z_tg,
                         const PredictorParams& params);

// P / |||P|||; zero stays zero.
Matrix spectral_normalize(const Matrix& p);

Matrix apply_ridge(const Matrix& p, double alpha);

struct PredictorState {
    Matrix p;
    PredictorKind kind = PredictorKind::NS;
    PredictorParams params;
    std::size_t step = 0;
};

// P ← ρP + (1−ρ)P_batch, step + 1.
PredictorState ema_update(PredictorState state, const Matrix& p_batch);

} // namespace orthopred
