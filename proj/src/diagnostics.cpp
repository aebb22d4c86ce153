#include "orthopred/diagnostics.hpp"

#include "orthopred/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace orthopred {

double stable_rank(const Matrix& m) {
    const double op = operator_norm(m);
    if (op == 0.0) throw DomainError("stable_rank: zero matrix");
    const double fro = frobenius_norm(m);
    return (fro / op) * (fro / op);
}

double normalized_stable_rank(const Matrix& m) {
    return stable_rank(m) / static_cast<double>(m.cols());
}

double projection_trace(const Matrix& m) {
    if (!m.is_square()) throw DimensionError("projection_trace: expected a square matrix");
    return trace(m);
}

Vector normalize_by_max(std::span<const double> values) {
    Vector out(values.begin(), values.end());
    const double mx = out.empty() ? 0.0 : *std::max_element(out.begin(), out.end());
    if (mx > 0.0)
        for (double& v : out) v /= mx;
    return out;
}

namespace {

double polar_distance(std::span<const double> s) {
    double acc = 0.0;
    for (double v : s) acc += (v - 1.0) * (v - 1.0);
    return std::sqrt(acc);
}

} // namespace

double dist_to_polar(const Matrix& p) { return polar_distance(singular_values(p)); }

SpectrumDiagnostics spectrum_diagnostics(const Matrix& p, std::size_t step) {
    SpectrumDiagnostics d;
    d.step = step;
    d.singular_values = singular_values(p);
    d.normalized_singular_values = normalize_by_max(d.singular_values);
    if (d.singular_values.empty() || d.singular_values.front() == 0.0)
        throw DomainError("spectrum_diagnostics: zero matrix");
    d.srank = 0.0;
    for (double s : d.normalized_singular_values) d.srank += s * s;
    d.trace = projection_trace(p);
    d.dist_polar = polar_distance(d.singular_values);
    d.quasi = quasi_orthogonality(p);
    return d;
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw DomainError("percentile: empty input");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double w = pos - static_cast<double>(lo);
    return values[lo] + w * (values[hi] - values[lo]);
}

Histogram spectrum_histogram(std::span<const double> values, std::size_t bins) {
    if (bins == 0) throw ConfigError("spectrum_histogram: bins must be at least 1");
    if (values.empty()) throw DomainError("spectrum_histogram: empty input");
    Histogram h;
    h.counts.assign(bins, 0);
    const double nb = static_cast<double>(bins);
    for (std::size_t i = 0; i < bins; ++i) {
        h.bin_lo.push_back(static_cast<double>(i) / nb);
        h.bin_hi.push_back(static_cast<double>(i + 1) / nb);
    }
    for (double v : values) {
        if (!(v >= 0.0 && v <= 1.0))
            throw DomainError("spectrum_histogram: value " + format_real(v) + " outside [0, 1]");
        std::size_t b = std::min(static_cast<std::size_t>(v * nb), bins - 1);
        // Guard against v·bins rounding across an edge.
        if (b > 0 && v < h.bin_lo[b]) --b;
        else if (b + 1 < bins && v >= h.bin_hi[b]) ++b;
        ++h.counts[b];
    }
    const std::vector<double> all(values.begin(), values.end());
    h.p25 = percentile(all, 0.25);
    h.p50 = percentile(all, 0.50);
    h.p75 = percentile(all, 0.75);
    return h;
}

double regression_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw DimensionError("regression_slope: need two or more paired points");
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx == 0.0) throw DomainError("regression_slope: x values are all equal");
    return sxy / sxx;
}

TrendTest mann_kendall(std::span<const double> series) {
    const std::size_t n = series.size();
    TrendTest t;
    if (n < 3) return t;
    for (std::size_t i = 0; i + 1 < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = series[j] - series[i];
            t.s += (d > 0) - (d < 0);
        }
    const double nn = static_cast<double>(n);
    const double var = nn * (nn - 1) * (2 * nn + 5) / 18.0;
    if (t.s > 0) t.z = (t.s - 1) / std::sqrt(var);
    else if (t.s < 0) t.z = (t.s + 1) / std::sqrt(var);
    return t;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

std::string format_real(double x) { return fmt::format("{:.17g}", x); }

std::string format_train_csv(const TrainLog& log) {
    std::string out(kTrainCsvHeader);
    out += '\n';
    for (const TrainRecord& r : log.records) {
        out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", r.step, format_real(r.loss),
                           format_real(r.pred_srank), format_real(r.pred_trace), format_real(r.latent_srank),
                           format_real(r.dist_polar), format_real(r.eps_proj), format_real(r.eps_sym),
                           format_real(r.eps_orth), format_real(r.balancing_res),
                           format_real(r.decorrelation_res));
    }
    return out;
}

std::string format_histogram_csv(const TrainLog& log, std::size_t bins) {
    std::string out(kHistogramCsvHeader);
    out += '\n';
    for (const TrainRecord& r : log.records) {
        if (r.latent_spectrum.empty()) continue;
        const Histogram h = spectrum_histogram(r.latent_spectrum, bins);
        for (std::size_t b = 0; b < bins; ++b)
            out += fmt::format("{},{},{},{}\n", r.step, format_real(h.bin_lo[b]), format_real(h.bin_hi[b]),
                               h.counts[b]);
    }
    return out;
}

namespace {

double parse_real(std::string_view field, std::size_t line) {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (field.empty() || ec != std::errc{} || p != field.data() + field.size())
        throw IoError("train csv line " + std::to_string(line) + ": bad number '" + std::string(field) + "'");
    return v;
}

} // namespace

std::vector<TrainRecord> parse_train_csv(std::string_view text) {
    std::vector<TrainRecord> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        const std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (line_no == 1) {
            if (line != kTrainCsvHeader) throw IoError("train csv: unexpected header");
            continue;
        }
        if (line.empty()) continue;
        std::vector<std::string_view> f;
        std::size_t start = 0;
        while (true) {
            const std::size_t c = line.find(',', start);
            f.push_back(line.substr(start, c == std::string_view::npos ? std::string_view::npos : c - start));
            if (c == std::string_view::npos) break;
            start = c + 1;
        }
        if (f.size() != 11)
            throw IoError("train csv line " + std::to_string(line_no) + ": expected 11 fields");
        TrainRecord r;
        std::size_t step = 0;
        const auto [p, ec] = std::from_chars(f[0].data(), f[0].data() + f[0].size(), step);
        if (ec != std::errc{} || p != f[0].data() + f[0].size())
            throw IoError("train csv line " + std::to_string(line_no) + ": bad step");
        r.step = step;
        double* dst[] = {&r.loss, &r.pred_srank, &r.pred_trace, &r.latent_srank, &r.dist_polar,
                         &r.eps_proj, &r.eps_sym, &r.eps_orth, &r.balancing_res, &r.decorrelation_res};
        for (std::size_t i = 0; i < 10; ++i) *dst[i] = parse_real(f[i + 1], line_no);
        out.push_back(std::move(r));
    }
    return out;
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory for " + path.string() + ": " + ec.message());
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    os.flush();
    if (!os) throw IoError("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string() + " for reading");
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void emit_csv(const TrainLog& log, const std::filesystem::path& path) {
    write_text_file(path, format_train_csv(log));
}

void emit_histogram_csv(const TrainLog& log, const std::filesystem::path& path, std::size_t bins) {
    write_text_file(path, format_histogram_csv(log, bins));
}

} // namespace orthopred
