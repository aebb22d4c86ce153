#include "doctest.h"
#include "support.hpp"

#include "orthopred/diagnostics.hpp"
#include "orthopred/errors.hpp"
#include "orthopred/matfun.hpp"
#include "orthopred/random.hpp"

#include <cmath>
#include <filesystem>
#include <limits>

using namespace orthopred;

TEST_CASE("stable rank") {
    CHECK(std::abs(stable_rank(Matrix::identity(7)) - 7.0) <= 1e-12);
    Rng rng(1);
    const Vector u = gaussian_vector(5, rng), v = gaussian_vector(4, rng);
    Matrix outer(5, 4);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 4; ++j) outer(i, j) = u[i] * v[j];
    CHECK(std::abs(stable_rank(outer) - 1.0) <= 1e-12);
    CHECK(std::abs(stable_rank(Matrix::diagonal({1, 1, 0.5})) - 2.25) <= 1e-12);
    CHECK_THROWS_AS(stable_rank(Matrix(3, 3)), DomainError);
    CHECK(std::abs(normalized_stable_rank(Matrix::identity(16)) - 1.0) <= 1e-12);

    for (int t = 0; t < 50; ++t) {
        const std::size_t r = 1 + t % 6;
        const Matrix m = matmul(gaussian_matrix(8, r, rng), gaussian_matrix(r, 8, rng));
        CHECK(stable_rank(m) <= static_cast<double>(numerical_rank(m)) + 1e-12);
        for (double c : {1e-6, 1.0, 1e6})
            CHECK(std::abs(stable_rank(m * c) - stable_rank(m)) <= 1e-10);
    }
}

TEST_CASE("projection trace") {
    CHECK(projection_trace(Matrix::identity(5)) == 5.0);
    CHECK(projection_trace(Matrix::diagonal({1, 1, 0})) == 2.0);
    Rng rng(2);
    for (std::size_t k = 1; k <= 5; ++k) {
        const Matrix q = random_orthonormal(9, k, rng);
        const Matrix p = matmul_transpose(q, q);
        const double kk = static_cast<double>(k);
        CHECK(std::abs(projection_trace(p) - kk) <= 1e-10);
        CHECK(std::abs(stable_rank(p) - kk) <= 1e-8);
    }
    CHECK_THROWS_AS(projection_trace(Matrix(2, 3)), DimensionError);
}

TEST_CASE("spectrum diagnostics") {
    Rng rng(3);
    const Matrix p = gaussian_matrix(6, 6, rng);
    const SpectrumDiagnostics d = spectrum_diagnostics(p, 42);
    CHECK(d.step == 42);
    double s2 = 0;
    for (double s : d.singular_values) s2 += s * s;
    CHECK(std::abs(d.srank - s2 / (d.singular_values[0] * d.singular_values[0])) <= 1e-8);
    CHECK(std::abs(d.srank - stable_rank(p)) <= 1e-8);
    CHECK(d.normalized_singular_values.front() == 1.0);
    for (double v : d.normalized_singular_values) CHECK((v >= 0.0 && v <= 1.0));
    CHECK(std::abs(d.dist_polar - frobenius_norm(p - polar_factor_svd(p))) <= 1e-10);
    CHECK(std::abs(d.trace - trace(p)) == 0.0);
}

TEST_CASE("histogram") {
    const Vector same(10, 0.3);
    Histogram h = spectrum_histogram(same, 5);
    std::size_t occupied = 0;
    for (auto c : h.counts) occupied += c > 0;
    CHECK(occupied == 1);
    CHECK(h.p25 == 0.3);
    CHECK(h.p50 == 0.3);
    CHECK(h.p75 == 0.3);

    h = spectrum_histogram(Vector{0, 0.5, 1}, 2);
    CHECK(h.counts == std::vector<std::size_t>{1, 2});
    CHECK(h.bin_lo[1] == 0.5);
    CHECK(h.bin_hi[1] == 1.0);

    // numpy.percentile([0, 0.5, 1, 0.25], [25, 50, 75]) = 0.1875, 0.375, 0.625.
    h = spectrum_histogram(Vector{0, 0.5, 1, 0.25}, 4);
    CHECK(std::abs(h.p25 - 0.1875) <= 1e-15);
    CHECK(std::abs(h.p50 - 0.375) <= 1e-15);
    CHECK(std::abs(h.p75 - 0.625) <= 1e-15);

    // Bin edges that do not round-trip through v·bins.
    h = spectrum_histogram(Vector{0.3, 0.7, 0.1, 0.9}, 10);
    CHECK(h.counts[3] == 1);
    CHECK(h.counts[7] == 1);
    CHECK(h.counts[1] == 1);
    CHECK(h.counts[9] == 1);

    Rng rng(4);
    Vector u(10000);
    for (double& v : u) v = rng.uniform();
    h = spectrum_histogram(u, 10);
    std::size_t total = 0;
    const double sd = std::sqrt(10000 * 0.1 * 0.9);
    for (auto c : h.counts) {
        total += c;
        CHECK(std::abs(static_cast<double>(c) - 1000.0) <= 5 * sd);
    }
    CHECK(total == 10000);

    CHECK_THROWS_AS(spectrum_histogram(Vector{}, 3), DomainError);
    CHECK_THROWS_AS(spectrum_histogram(Vector{1.5}, 3), DomainError);
    CHECK_THROWS_AS(spectrum_histogram(Vector{0.5}, 0), ConfigError);
}

TEST_CASE("trend statistics") {
    const Vector x{0, 1, 2, 3};
    CHECK(std::abs(regression_slope(x, Vector{1, 3, 5, 7}) - 2.0) <= 1e-15);

    Vector down(40);
    for (std::size_t i = 0; i < 40; ++i) down[i] = 1.0 / (1.0 + static_cast<double>(i));
    const TrendTest t = mann_kendall(down);
    CHECK(t.s == -40.0 * 39.0 / 2.0);
    CHECK(t.decreasing());
    CHECK_FALSE(t.increasing());

    // Hand example: 1, 3, 2 → S = (+1) + (+1) + (−1) = 1, var = 3·2·11/18.
    const TrendTest h = mann_kendall(Vector{1, 3, 2});
    CHECK(h.s == 1.0);
    CHECK(h.z == 0.0);

    Rng rng(5);
    Vector noise(60);
    for (double& v : noise) v = rng.normal();
    CHECK(std::abs(mann_kendall(noise).z) < 3.0);
}

TEST_CASE("csv") {
    TrainLog log;
    CHECK(format_train_csv(log) == std::string(kTrainCsvHeader) + "\n");
    CHECK(format_histogram_csv(log) == std::string(kHistogramCsvHeader) + "\n");

    TrainRecord r;
    r.step = 7;
    r.loss = 0.1;
    r.pred_srank = 1.0 / 3.0;
    r.pred_trace = -2.5e-300;
    r.latent_srank = std::numeric_limits<double>::max();
    r.dist_polar = std::numeric_limits<double>::denorm_min();
    r.eps_proj = 1e-17;
    r.eps_sym = 0.0;
    r.eps_orth = 123456789.123456789;
    r.balancing_res = std::nextafter(1.0, 2.0);
    r.decorrelation_res = std::sqrt(2.0);
    log.records.push_back(r);
    const auto back = parse_train_csv(format_train_csv(log));
    REQUIRE(back.size() == 1);
    CHECK(back[0] == r);

    r.latent_spectrum = {1.0, 0.5, 0.05};
    log.records[0] = r;
    const std::string hist = format_histogram_csv(log, 2);
    CHECK(hist == "step,bin_lo,bin_hi,count\n7,0,0.5,1\n7,0.5,1,2\n");

    CHECK_THROWS_AS(parse_train_csv("nope\n"), IoError);
    CHECK_THROWS_AS(parse_train_csv(std::string(kTrainCsvHeader) + "\n1,2\n"), IoError);

    const auto dir = std::filesystem::temp_directory_path() / "orthopred_test_csv";
    std::filesystem::remove_all(dir);
    emit_csv(log, dir / "sub" / "log.csv");
    CHECK(read_text_file(dir / "sub" / "log.csv") == format_train_csv(log));
    std::filesystem::remove_all(dir);

    try {
        emit_csv(log, "/proc/orthopred/none.csv");
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("/proc/orthopred") != std::string::npos);
    }
}
