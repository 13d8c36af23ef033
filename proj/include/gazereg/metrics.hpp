#pragma once

// Visual-search metrics and the statistics on top of them: per-session
// search measures, hazard recognition indices, Pearson correlation with
// p-values, and the dwell-time validation arithmetic.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gazereg/errors.hpp"
#include "gazereg/session.hpp"

namespace gazereg::metrics {

/// One session's visual-search measures. MFD, ROAFT, and FR are undefined
/// without fixations and stay absent rather than reading as zero.
struct MetricsReport {
    double sd_ms = 0.0;                    ///< search duration: the session span
    int fc = 0;                            ///< fixation count
    double ft_ms = 0.0;                    ///< total fixation time
    std::optional<double> mfd_ms;          ///< mean fixation duration, ft/fc
    std::optional<double> roaft;           ///< in-AOI fixation time over ft
    std::optional<double> fr;              ///< in-AOI fixation count over fc
    std::map<std::string, double> dwell_ms; ///< per-AOI dwell time

    bool operator==(const MetricsReport&) const = default;
};

/// Hazards a worker identified on one photograph, against the number the
/// experts planted there.
struct ImageHazardCount {
    int identified = 0;
    int total = 0;

    bool operator==(const ImageHazardCount&) const = default;
};

/// Per-worker hazard recognition: one HRI per photograph and their mean.
struct HazardRecognitionRecord {
    std::string worker_id;
    std::vector<ImageHazardCount> images;
    std::vector<double> hri;
    double av_hri = 0.0;

    bool operator==(const HazardRecognitionRecord&) const = default;
};

/// One line of the correlation table: a metric's Pearson r against AV_HRI.
/// p is absent when fewer than three workers carried the metric.
struct CorrelationRow {
    std::string metric;
    double r = 0.0;
    std::optional<double> p;
    int n = 0;

    bool operator==(const CorrelationRow&) const = default;
};

/// Per-worker session averages as fed to the correlation table. Metric
/// fields are absent where a worker has no usable sessions for them.
struct WorkerAverages {
    std::string worker_id;
    double av_hri = 0.0;
    std::optional<double> sd_ms;
    std::optional<double> ft_ms;
    std::optional<double> fc;
    std::optional<double> mfd_ms;
    std::optional<double> roaft;
    std::optional<double> fr;

    bool operator==(const WorkerAverages&) const = default;
};

/// Dwell-time validation for one AOI: system channel vs manual channel.
struct ValidationRow {
    std::string aoi_id;
    double system_ms = 0.0;
    double manual_ms = 0.0;
    double variation_ms = 0.0;
    int accuracy_pct = 0;

    bool operator==(const ValidationRow&) const = default;
};

struct ValidationReport {
    std::vector<ValidationRow> rows; ///< ordered by AOI id
    int mean_accuracy_pct = 0;

    bool operator==(const ValidationReport&) const = default;
};

/// Hazard recognition index: identified / total.
/// Throws ZeroTotal when total < 1, CountExceedsTotal when identified is
/// outside [0, total].
double compute_hri(int identified, int total);

/// Arithmetic mean of per-image HRIs. Throws EmptyList on no input.
double compute_av_hri(std::span<const double> hri);

/// Bundles per-image counts into a worker record with HRIs and their mean.
HazardRecognitionRecord make_hazard_record(std::string worker_id,
                                           std::span<const ImageHazardCount> images);

/// Folds one session's fixations and dwells into a MetricsReport. A fixation
/// counts as in-AOI when its centroid hit-tested into some AOI. Dwell times
/// sum per AOI. Throws DegenerateSample when span_ms is not positive.
MetricsReport compute_metrics(std::span<const session::Fixation> fixations,
                              std::span<const session::AoiDwell> dwells, double span_ms);

/// Product-moment correlation coefficient, compensated summation throughout.
/// Throws LengthMismatch on unequal inputs and ZeroVariance when either
/// argument has none (fewer than two points included).
double pearson_r(std::span<const double> x, std::span<const double> y);

/// Two-tailed p-value for a Pearson r over n pairs, via the t-transform with
/// n - 2 degrees of freedom and a continued-fraction regularized incomplete
/// beta good to 1e-10. Throws DegenerateSample when n < 3 or |r| >= 1.
double p_value_two_tailed(double r, int n);

/// Correlates each metric (SD, FT, FC, MFD, ROAFT, FR) against AV_HRI over
/// the workers carrying that metric; n is reported per row and a row's p is
/// absent below three workers. A planted exact linear relation reports
/// |r| = 1 with p = 0. Throws TooFewWorkers when fewer than three workers
/// are supplied at all or survive a row's missing-data drop.
std::vector<CorrelationRow> correlation_table(std::span<const WorkerAverages> workers);

/// Reads the per-worker averages CSV with header
/// `worker_id,av_hri,sd_ms,ft_ms,fc,mfd_ms,roaft,fr`. Blank metric cells
/// mean missing; worker_id and av_hri must be present. Throws Io on an
/// unreadable file and MalformedRow(line) on bad rows.
std::vector<WorkerAverages> load_worker_table(const std::string& path);

/// Compares system dwell times against the manual channel per AOI:
/// variation = |system - manual|, accuracy = (1 - variation/system) x 100
/// rounded half-up, mean = rounded mean of the unrounded accuracies.
/// Throws KeyMismatch when AOI key sets differ, ZeroSystemDwell on a
/// non-positive system dwell, EmptyList when there is nothing to compare.
ValidationReport validation_accuracy(const std::map<std::string, double>& system_dt,
                                     const std::map<std::string, double>& manual_dt);

/// The manual dwell channel: per AOI, the count of disjoint runs of
/// frames_per_set consecutive same-AOI frames times mfd_ms. A run shorter
/// than frames_per_set contributes nothing; a run of two sets counts twice.
std::map<std::string, double> manual_dwell_oracle(
    std::span<const std::optional<std::string>> hits, double mfd_ms, int frames_per_set = 6);

} // namespace gazereg::metrics
