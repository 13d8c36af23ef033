#include "gazereg/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <string_view>
#include <utility>

namespace gazereg::metrics {
namespace {

/// Kahan-compensated accumulator; the correlation sums run over hundreds of
/// near-cancelling products, where naive summation visibly moves r.
struct KahanSum {
    double sum = 0.0;
    double c = 0.0;
    void add(double v) {
        const double y = v - c;
        const double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
};

double round_half_up(double v) { return std::floor(v + 0.5); }

/// Continued-fraction kernel for the regularized incomplete beta (Lentz's
/// method). Converges in a few dozen terms for the t-distribution arguments
/// used here.
double betacf(double a, double b, double x) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-14;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 400; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) break;
    }
    return h;
}

/// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double front = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                                  a * std::log(x) + b * std::log1p(-x));
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

std::vector<std::string_view> split_csv(std::string_view row) {
    std::vector<std::string_view> fields;
    for (;;) {
        const auto comma = row.find(',');
        if (comma == std::string_view::npos) {
            fields.push_back(row);
            return fields;
        }
        fields.push_back(row.substr(0, comma));
        row.remove_prefix(comma + 1);
    }
}

double parse_real_cell(std::string_view cell, int line, const char* what) {
    double value = 0.0;
    const char* end = cell.data() + cell.size();
    const auto [ptr, ec] = std::from_chars(cell.data(), end, value);
    if (ec != std::errc{} || ptr != end || !std::isfinite(value))
        throw MalformedRow(line, std::string(what) + " is not a real number: '" +
                                     std::string(cell) + "'");
    return value;
}

std::optional<double> parse_optional_cell(std::string_view cell, int line, const char* what) {
    if (cell.empty()) return std::nullopt;
    return parse_real_cell(cell, line, what);
}

} // namespace

double compute_hri(int identified, int total) {
    if (total < 1) throw ZeroTotal("hazard total must be at least 1");
    if (identified < 0 || identified > total)
        throw CountExceedsTotal("identified count " + std::to_string(identified) +
                                " outside [0, " + std::to_string(total) + "]");
    return static_cast<double>(identified) / static_cast<double>(total);
}

double compute_av_hri(std::span<const double> hri) {
    if (hri.empty()) throw EmptyList("no HRI values to average");
    KahanSum sum;
    for (const double v : hri) sum.add(v);
    return sum.sum / static_cast<double>(hri.size());
}

HazardRecognitionRecord make_hazard_record(std::string worker_id,
                                           std::span<const ImageHazardCount> images) {
    HazardRecognitionRecord rec;
    rec.worker_id = std::move(worker_id);
    rec.images.assign(images.begin(), images.end());
    rec.hri.reserve(images.size());
    for (const auto& img : images) rec.hri.push_back(compute_hri(img.identified, img.total));
    rec.av_hri = compute_av_hri(rec.hri);
    return rec;
}

MetricsReport compute_metrics(std::span<const session::Fixation> fixations,
                              std::span<const session::AoiDwell> dwells, double span_ms) {
    if (!(span_ms > 0.0)) throw DegenerateSample("session span must be positive");

    MetricsReport rep;
    rep.sd_ms = span_ms;
    rep.fc = static_cast<int>(fixations.size());

    KahanSum ft, on_target;
    int in_aoi = 0;
    for (const auto& f : fixations) {
        ft.add(f.duration_ms());
        if (f.hit_aoi) {
            on_target.add(f.duration_ms());
            ++in_aoi;
        }
    }
    rep.ft_ms = ft.sum;
    if (rep.fc > 0) {
        rep.mfd_ms = rep.ft_ms / rep.fc;
        if (rep.ft_ms > 0.0) rep.roaft = on_target.sum / rep.ft_ms;
        rep.fr = static_cast<double>(in_aoi) / rep.fc;
    }
    for (const auto& d : dwells) rep.dwell_ms[d.aoi_id] += d.duration_ms;
    return rep;
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw LengthMismatch("series lengths differ: " + std::to_string(x.size()) + " vs " +
                             std::to_string(y.size()));
    if (x.size() < 2) throw ZeroVariance("need at least two points");

    KahanSum mx, my;
    for (const double v : x) mx.add(v);
    for (const double v : y) my.add(v);
    const double mean_x = mx.sum / static_cast<double>(x.size());
    const double mean_y = my.sum / static_cast<double>(y.size());

    KahanSum sxy, sxx, syy;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mean_x;
        const double dy = y[i] - mean_y;
        sxy.add(dx * dy);
        sxx.add(dx * dx);
        syy.add(dy * dy);
    }
    if (sxx.sum <= 0.0 || syy.sum <= 0.0) throw ZeroVariance("an argument is constant");
    return std::clamp(sxy.sum / std::sqrt(sxx.sum * syy.sum), -1.0, 1.0);
}

double p_value_two_tailed(double r, int n) {
    if (n < 3) throw DegenerateSample("p-value needs at least 3 pairs");
    if (!(std::abs(r) < 1.0)) throw DegenerateSample("|r| must be below 1");
    if (r == 0.0) return 1.0;
    const double df = n - 2;
    const double t2 = r * r * df / (1.0 - r * r);
    // two-tailed Student-t tail mass: P(|T| >= t) = I_{df/(df+t^2)}(df/2, 1/2)
    return incomplete_beta(df / 2.0, 0.5, df / (df + t2));
}

std::vector<CorrelationRow> correlation_table(std::span<const WorkerAverages> workers) {
    if (workers.size() < 3)
        throw TooFewWorkers("correlation needs at least 3 workers, got " +
                            std::to_string(workers.size()));

    const std::pair<const char*, std::optional<double> WorkerAverages::*> columns[] = {
        {"SD", &WorkerAverages::sd_ms},   {"FT", &WorkerAverages::ft_ms},
        {"FC", &WorkerAverages::fc},      {"MFD", &WorkerAverages::mfd_ms},
        {"ROAFT", &WorkerAverages::roaft}, {"FR", &WorkerAverages::fr},
    };

    std::vector<CorrelationRow> rows;
    for (const auto& [name, field] : columns) {
        std::vector<double> metric, av;
        for (const auto& w : workers) {
            if (!(w.*field)) continue;
            metric.push_back(*(w.*field));
            av.push_back(w.av_hri);
        }
        if (metric.size() < 3)
            throw TooFewWorkers(std::string(name) + " row has " +
                                std::to_string(metric.size()) + " workers, needs 3");
        CorrelationRow row;
        row.metric = name;
        row.n = static_cast<int>(metric.size());
        row.r = pearson_r(metric, av);
        row.p = std::abs(row.r) < 1.0 ? p_value_two_tailed(row.r, row.n) : 0.0;
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<WorkerAverages> load_worker_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Io("cannot open worker table: " + path);

    std::string row;
    if (!std::getline(in, row)) throw Io(path + ": empty worker table");
    if (!row.empty() && row.back() == '\r') row.pop_back();
    if (row != "worker_id,av_hri,sd_ms,ft_ms,fc,mfd_ms,roaft,fr")
        throw MalformedRow(1, "expected header worker_id,av_hri,sd_ms,ft_ms,fc,mfd_ms,roaft,fr");

    std::vector<WorkerAverages> workers;
    for (int line = 2; std::getline(in, row); ++line) {
        if (!row.empty() && row.back() == '\r') row.pop_back();
        if (row.empty()) continue;

        const auto fields = split_csv(row);
        if (fields.size() != 8) throw MalformedRow(line, "expected 8 fields");
        if (fields[0].empty()) throw MalformedRow(line, "worker_id is blank");

        WorkerAverages w;
        w.worker_id = std::string(fields[0]);
        w.av_hri = parse_real_cell(fields[1], line, "av_hri");
        w.sd_ms = parse_optional_cell(fields[2], line, "sd_ms");
        w.ft_ms = parse_optional_cell(fields[3], line, "ft_ms");
        w.fc = parse_optional_cell(fields[4], line, "fc");
        w.mfd_ms = parse_optional_cell(fields[5], line, "mfd_ms");
        w.roaft = parse_optional_cell(fields[6], line, "roaft");
        w.fr = parse_optional_cell(fields[7], line, "fr");
        workers.push_back(std::move(w));
    }
    return workers;
}

ValidationReport validation_accuracy(const std::map<std::string, double>& system_dt,
                                     const std::map<std::string, double>& manual_dt) {
    for (const auto& [aoi, unused] : system_dt)
        if (!manual_dt.count(aoi)) throw KeyMismatch("manual channel is missing AOI " + aoi);
    for (const auto& [aoi, unused] : manual_dt)
        if (!system_dt.count(aoi)) throw KeyMismatch("system channel is missing AOI " + aoi);
    if (system_dt.empty()) throw EmptyList("no AOIs to validate");

    ValidationReport rep;
    KahanSum mean;
    for (const auto& [aoi, system] : system_dt) {
        if (!(system > 0.0)) throw ZeroSystemDwell("system dwell for " + aoi + " is not positive");
        const double manual = manual_dt.at(aoi);
        ValidationRow row;
        row.aoi_id = aoi;
        row.system_ms = system;
        row.manual_ms = manual;
        row.variation_ms = std::abs(system - manual);
        const double accuracy = (1.0 - row.variation_ms / system) * 100.0;
        row.accuracy_pct = static_cast<int>(round_half_up(accuracy));
        mean.add(accuracy);
        rep.rows.push_back(std::move(row));
    }
    rep.mean_accuracy_pct =
        static_cast<int>(round_half_up(mean.sum / static_cast<double>(rep.rows.size())));
    return rep;
}

std::map<std::string, double> manual_dwell_oracle(
    std::span<const std::optional<std::string>> hits, double mfd_ms, int frames_per_set) {
    std::map<std::string, double> out;
    std::size_t i = 0;
    while (i < hits.size()) {
        if (!hits[i]) {
            ++i;
            continue;
        }
        std::size_t j = i + 1;
        while (j < hits.size() && hits[j] && *hits[j] == *hits[i]) ++j;
        const std::size_t sets = (j - i) / static_cast<std::size_t>(frames_per_set);
        if (sets > 0) out[*hits[i]] += static_cast<double>(sets) * mfd_ms;
        i = j;
    }
    return out;
}

} // namespace gazereg::metrics
