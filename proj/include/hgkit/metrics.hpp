#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hgkit/losses.hpp"

namespace hg {

struct Detection {
    std::string image;
    int class_id = 0;
    BBox box;
    double conf = 0; // in [0, 1]
};

struct GroundTruth {
    std::string image;
    int class_id = 0;
    BBox box;
};

struct MatchResult {
    std::vector<char> is_tp; // one flag per detection, input order
    std::int64_t unmatched_gt = 0;
};

/// Greedy one-to-one matching for detections and ground truths of a single
/// (image, class) bucket. Detections are processed in descending confidence
/// (stable w.r.t. input order); each takes the unmatched ground truth of
/// highest IoU when that IoU >= iou_thresh (lowest index on IoU ties).
MatchResult match_detections(std::span<const Detection> dets,
                             std::span<const GroundTruth> gts, double iou_thresh);

struct PrPoint {
    double recall = 0;
    double precision = 0;
};

struct ApResult {
    bool defined = false; // false when n_gt == 0
    double ap = 0;
    std::vector<PrPoint> points; // cumulative (R(k), P(k)), k = 1..K
};

/// Area under the monotone precision envelope over recall (all-point
/// interpolation). `flags` must be sorted by descending confidence.
ApResult average_precision(std::span<const char> flags, std::int64_t n_gt);

struct ClassReport {
    int class_id = 0;
    bool excluded = false; // no ground truth; left out of the means
    std::int64_t n_gt = 0;
    std::int64_t n_det = 0;
    std::vector<double> ap_by_threshold; // aligned with EvalReport::thresholds
    double ap_primary = 0;               // at thresholds.front()
    double ap_mean = 0;                  // mean over all thresholds
    std::vector<PrPoint> pr;             // curve at thresholds.front()
    // Operating point: the confidence cut maximizing F1 on the primary curve.
    double precision = 0, recall = 0, f1 = 0;
    std::int64_t tp = 0, fp = 0, fn = 0;
};

struct EvalReport {
    std::vector<double> thresholds;
    std::vector<ClassReport> classes;
    std::int64_t included_classes = 0;
    double map_primary = 0; // mean AP at thresholds.front()
    double map_mean = 0;    // mean AP over the whole threshold list
    double precision = 0, recall = 0, f1 = 0; // means over included classes
    std::int64_t tp = 0, fp = 0, fn = 0;      // sums over included classes
};

/// The standard 0.50:0.05:0.95 threshold sweep (10 values).
std::vector<double> iou_sweep();

/// Per-class matching and AP at every threshold; thresholds.front() is the
/// reporting threshold for curves and operating points. Class ids must be
/// in [0, num_classes). Parallelizes over (class, threshold) pairs.
EvalReport evaluate(std::span<const Detection> dets,
                    std::span<const GroundTruth> gts,
                    std::vector<double> thresholds, int num_classes);

std::vector<Detection> read_detections_jsonl(const std::filesystem::path& path);
std::vector<GroundTruth> read_ground_truth_jsonl(const std::filesystem::path& path);

std::string report_to_json(const EvalReport& report);

/// One row per PR point: class,recall,precision.
std::string pr_curve_csv(const EvalReport& report);

} // namespace hg
