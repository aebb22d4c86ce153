#pragma once

// Rank and spectrum instrumentation, training-log records and their CSV
// serialisation.

#include "orthopred/linalg.hpp"
#include "orthopred/riemann.hpp"

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace orthopred {

// ‖M‖²_F / |||M|||². Throws DomainError for the zero matrix.
double stable_rank(const Matrix& m);
// Stable rank divided by the column count, so an orthogonal matrix scores 1.
double normalized_stable_rank(const Matrix& m);
// tr(M); equals the rank for an orthogonal projection.
double projection_trace(const Matrix& m);
// Values divided by their maximum (all zeros stay zero).
Vector normalize_by_max(std::span<const double> values);
// ‖P − U‖_F for the polar factor U of P, i.e. √Σ(sᵢ − 1)².
double dist_to_polar(const Matrix& p);

struct SpectrumDiagnostics {
    std::size_t step = 0;
    double srank = 0.0;
    double trace = 0.0;
    Vector singular_values;
    Vector normalized_singular_values;
    double dist_polar = 0.0;
    QuasiOrthoReport quasi;
};

SpectrumDiagnostics spectrum_diagnostics(const Matrix& p, std::size_t step);

struct Histogram {
    Vector bin_lo;
    Vector bin_hi;
    std::vector<std::size_t> counts;
    double p25 = 0.0;
    double p50 = 0.0;
    double p75 = 0.0;
};

// Counts over `bins` equal bins of [0, 1]; bins are left-closed and the top
// bin is also right-closed. Percentiles interpolate linearly between order
// statistics. Throws DomainError for empty input or values outside [0, 1],
// ConfigError for bins == 0.
Histogram spectrum_histogram(std::span<const double> values, std::size_t bins);

// Linear interpolation between order statistics, q in [0, 1].
double percentile(std::vector<double> values, double q);

// Ordinary least-squares slope of y against x.
double regression_slope(std::span<const double> x, std::span<const double> y);

struct TrendTest {
    double s = 0.0;  // Mann-Kendall S statistic
    double z = 0.0;  // continuity-corrected normal score
    bool decreasing(double z_crit = 1.6448536269514722) const noexcept { return z < -z_crit; }
    bool increasing(double z_crit = 1.6448536269514722) const noexcept { return z > z_crit; }
};

// Mann-Kendall trend test on a series in order (ties counted as zero).
TrendTest mann_kendall(std::span<const double> series);

struct TrainRecord {
    std::size_t step = 0;
    double loss = 0.0;
    double pred_srank = 0.0;
    double pred_trace = 0.0;
    double latent_srank = 0.0;
    double dist_polar = 0.0;
    double eps_proj = 0.0;
    double eps_sym = 0.0;
    double eps_orth = 0.0;
    double balancing_res = 0.0;
    double decorrelation_res = 0.0;
    // Normalised singular values of the online latent covariance.
    Vector latent_spectrum;

    bool operator==(const TrainRecord&) const = default;
};

struct TrainLog {
    std::vector<TrainRecord> records;
};

inline constexpr std::string_view kTrainCsvHeader =
    "step,loss,pred_srank,pred_trace,latent_srank,dist_polar,eps_proj,eps_sym,eps_orth,balancing_res,"
    "decorrelation_res";
inline constexpr std::string_view kHistogramCsvHeader = "step,bin_lo,bin_hi,count";
inline constexpr std::size_t kDefaultHistogramBins = 20;

// 17 significant digits, enough to reload the exact double.
std::string format_real(double x);

std::string format_train_csv(const TrainLog& log);
std::string format_histogram_csv(const TrainLog& log, std::size_t bins = kDefaultHistogramBins);
// Inverse of format_train_csv (latent_spectrum is not serialised).
// Throws IoError on a malformed document.
std::vector<TrainRecord> parse_train_csv(std::string_view text);

// Write text to path, creating parent directories. Throws IoError with the path.
void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

void emit_csv(const TrainLog& log, const std::filesystem::path& path);
void emit_histogram_csv(const TrainLog& log, const std::filesystem::path& path,
                        std::size_t bins = kDefaultHistogramBins);

} // namespace orthopred
