#include "hgkit/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "hgkit/parallel.hpp"

namespace hg {

MatchResult match_detections(std::span<const Detection> dets,
                             std::span<const GroundTruth> gts, double iou_thresh) {
    if (!(iou_thresh > 0.0 && iou_thresh < 1.0)) {
        throw std::invalid_argument("match_detections: threshold must lie in (0, 1)");
    }
    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return dets[a].conf > dets[b].conf;
    });

    MatchResult r;
    r.is_tp.assign(dets.size(), 0);
    std::vector<char> taken(gts.size(), 0);
    for (std::size_t idx : order) {
        std::ptrdiff_t best = -1;
        double best_iou = -1.0;
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (taken[g]) {
                continue;
            }
            const double iou = box_iou(dets[idx].box, gts[g].box);
            if (iou > best_iou) { // strict: IoU ties keep the lowest index
                best_iou = iou;
                best = static_cast<std::ptrdiff_t>(g);
            }
        }
        if (best >= 0 && best_iou >= iou_thresh) {
            r.is_tp[idx] = 1;
            taken[static_cast<std::size_t>(best)] = 1;
        }
    }
    r.unmatched_gt = static_cast<std::int64_t>(
        std::count(taken.begin(), taken.end(), static_cast<char>(0)));
    return r;
}

ApResult average_precision(std::span<const char> flags, std::int64_t n_gt) {
    ApResult r;
    if (n_gt == 0) {
        return r; // undefined; the class is excluded from means
    }
    r.defined = true;
    std::int64_t tp = 0;
    r.points.reserve(flags.size());
    for (std::size_t k = 0; k < flags.size(); ++k) {
        tp += flags[k] ? 1 : 0;
        r.points.push_back({static_cast<double>(tp) / static_cast<double>(n_gt),
                            static_cast<double>(tp) / static_cast<double>(k + 1)});
    }
    // Monotone precision envelope, then exact area under the step curve.
    std::vector<double> env(r.points.size());
    double running = 0;
    for (std::size_t k = r.points.size(); k-- > 0;) {
        running = std::max(running, r.points[k].precision);
        env[k] = running;
    }
    double prev_recall = 0;
    for (std::size_t k = 0; k < r.points.size(); ++k) {
        r.ap += (r.points[k].recall - prev_recall) * env[k];
        prev_recall = r.points[k].recall;
    }
    return r;
}

std::vector<double> iou_sweep() {
    std::vector<double> t;
    for (int i = 0; i < 10; ++i) {
        t.push_back(0.50 + 0.05 * i);
    }
    return t;
}

namespace {

struct ClassBucket {
    // Indices into the full detection list, one bucket per class.
    std::vector<std::size_t> det_idx;
    std::vector<std::size_t> gt_idx;
};

// Flags for one class at one threshold, ordered by descending confidence
// (input order on ties), pooled over images.
std::vector<char> class_flags(std::span<const Detection> dets,
                              std::span<const GroundTruth> gts,
                              const ClassBucket& bucket, double thresh,
                              const std::vector<std::size_t>& conf_order) {
    std::map<std::string, std::pair<std::vector<Detection>, std::vector<GroundTruth>>> images;
    std::map<std::string, std::vector<std::size_t>> image_det_positions;
    for (std::size_t pos = 0; pos < bucket.det_idx.size(); ++pos) {
        const Detection& d = dets[bucket.det_idx[pos]];
        images[d.image].first.push_back(d);
        image_det_positions[d.image].push_back(pos);
    }
    for (std::size_t idx : bucket.gt_idx) {
        images[gts[idx].image].second.push_back(gts[idx]);
    }

    std::vector<char> per_class(bucket.det_idx.size(), 0);
    for (const auto& [image, content] : images) {
        const MatchResult m = match_detections(content.first, content.second, thresh);
        const std::vector<std::size_t>& positions = image_det_positions[image];
        for (std::size_t k = 0; k < positions.size(); ++k) {
            per_class[positions[k]] = m.is_tp[k];
        }
    }

    std::vector<char> sorted(per_class.size());
    for (std::size_t k = 0; k < conf_order.size(); ++k) {
        sorted[k] = per_class[conf_order[k]];
    }
    return sorted;
}

} // namespace

EvalReport evaluate(std::span<const Detection> dets, std::span<const GroundTruth> gts,
                    std::vector<double> thresholds, int num_classes) {
    if (thresholds.empty()) {
        throw std::invalid_argument("evaluate: empty threshold list");
    }
    if (num_classes < 1) {
        throw std::invalid_argument("evaluate: need at least one class");
    }
    std::vector<ClassBucket> buckets(static_cast<std::size_t>(num_classes));
    for (std::size_t i = 0; i < dets.size(); ++i) {
        if (dets[i].class_id < 0 || dets[i].class_id >= num_classes) {
            throw std::invalid_argument("evaluate: detection class id out of range");
        }
        buckets[static_cast<std::size_t>(dets[i].class_id)].det_idx.push_back(i);
    }
    for (std::size_t i = 0; i < gts.size(); ++i) {
        if (gts[i].class_id < 0 || gts[i].class_id >= num_classes) {
            throw std::invalid_argument("evaluate: ground-truth class id out of range");
        }
        buckets[static_cast<std::size_t>(gts[i].class_id)].gt_idx.push_back(i);
    }

    EvalReport report;
    report.thresholds = thresholds;
    report.classes.resize(static_cast<std::size_t>(num_classes));

    // AP table over (class, threshold); each cell is independent work.
    const std::int64_t t_count = static_cast<std::int64_t>(thresholds.size());
    std::vector<std::vector<char>> primary_flags(static_cast<std::size_t>(num_classes));
    std::vector<std::vector<double>> ap_table(static_cast<std::size_t>(num_classes),
                                              std::vector<double>(thresholds.size(), 0.0));

    std::vector<std::vector<std::size_t>> conf_orders(static_cast<std::size_t>(num_classes));
    for (int c = 0; c < num_classes; ++c) {
        const ClassBucket& bucket = buckets[static_cast<std::size_t>(c)];
        std::vector<std::size_t>& order = conf_orders[static_cast<std::size_t>(c)];
        order.resize(bucket.det_idx.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return dets[bucket.det_idx[a]].conf > dets[bucket.det_idx[b]].conf;
        });
    }

    const std::int64_t cells = static_cast<std::int64_t>(num_classes) * t_count;
#if defined(_OPENMP)
#pragma omp parallel for schedule(dynamic) num_threads(hg::thread_count())
#endif
    for (std::int64_t cell = 0; cell < cells; ++cell) {
        const auto c = static_cast<std::size_t>(cell / t_count);
        const auto t = static_cast<std::size_t>(cell % t_count);
        const ClassBucket& bucket = buckets[c];
        if (bucket.gt_idx.empty()) {
            continue;
        }
        std::vector<char> flags =
            class_flags(dets, gts, bucket, thresholds[t], conf_orders[c]);
        ap_table[c][t] =
            average_precision(flags, static_cast<std::int64_t>(bucket.gt_idx.size())).ap;
        if (t == 0) {
            primary_flags[c] = std::move(flags);
        }
    }

    for (int c = 0; c < num_classes; ++c) {
        const ClassBucket& bucket = buckets[static_cast<std::size_t>(c)];
        ClassReport& cls = report.classes[static_cast<std::size_t>(c)];
        cls.class_id = c;
        cls.n_gt = static_cast<std::int64_t>(bucket.gt_idx.size());
        cls.n_det = static_cast<std::int64_t>(bucket.det_idx.size());
        if (cls.n_gt == 0) {
            cls.excluded = true;
            cls.fp = cls.n_det; // every detection of a GT-free class is false
            continue;
        }
        cls.ap_by_threshold = ap_table[static_cast<std::size_t>(c)];
        cls.ap_primary = cls.ap_by_threshold.front();
        cls.ap_mean = std::accumulate(cls.ap_by_threshold.begin(),
                                      cls.ap_by_threshold.end(), 0.0) /
                      static_cast<double>(cls.ap_by_threshold.size());

        const std::vector<char>& flags = primary_flags[static_cast<std::size_t>(c)];
        const ApResult primary = average_precision(flags, cls.n_gt);
        cls.pr = primary.points;

        // Operating point: the cut with the highest F1 (first such cut wins).
        double best_f1 = 0;
        std::ptrdiff_t best_k = -1;
        std::int64_t tp = 0;
        for (std::size_t k = 0; k < flags.size(); ++k) {
            tp += flags[k] ? 1 : 0;
            const double p = static_cast<double>(tp) / static_cast<double>(k + 1);
            const double r = static_cast<double>(tp) / static_cast<double>(cls.n_gt);
            const double f1 = p + r > 0 ? 2.0 * p * r / (p + r) : 0.0;
            if (f1 > best_f1) {
                best_f1 = f1;
                best_k = static_cast<std::ptrdiff_t>(k);
            }
        }
        if (best_k >= 0) {
            std::int64_t tp_at = 0;
            for (std::ptrdiff_t k = 0; k <= best_k; ++k) {
                tp_at += flags[static_cast<std::size_t>(k)] ? 1 : 0;
            }
            cls.tp = tp_at;
            cls.fp = best_k + 1 - tp_at;
            cls.fn = cls.n_gt - tp_at;
            cls.precision = static_cast<double>(tp_at) / static_cast<double>(best_k + 1);
            cls.recall = static_cast<double>(tp_at) / static_cast<double>(cls.n_gt);
            cls.f1 = best_f1;
        } else {
            cls.fn = cls.n_gt; // no useful cut: report the empty one
        }

        ++report.included_classes;
        report.map_primary += cls.ap_primary;
        report.map_mean += cls.ap_mean;
        report.precision += cls.precision;
        report.recall += cls.recall;
        report.f1 += cls.f1;
        report.tp += cls.tp;
        report.fp += cls.fp;
        report.fn += cls.fn;
    }
    if (report.included_classes > 0) {
        const auto k = static_cast<double>(report.included_classes);
        report.map_primary /= k;
        report.map_mean /= k;
        report.precision /= k;
        report.recall /= k;
        report.f1 /= k;
    }
    return report;
}

namespace {

BBox box_from_json(const nlohmann::json& j) {
    BBox b{j.at("cx").get<double>(), j.at("cy").get<double>(),
           j.at("w").get<double>(), j.at("h").get<double>()};
    b.validate();
    return b;
}

template <typename Fn>
void for_each_jsonl(const std::filesystem::path& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            fn(nlohmann::json::parse(line));
        } catch (const std::exception& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                     ": " + e.what());
        }
    }
}

} // namespace

std::vector<Detection> read_detections_jsonl(const std::filesystem::path& path) {
    std::vector<Detection> dets;
    for_each_jsonl(path, [&](const nlohmann::json& j) {
        Detection d;
        d.image = j.at("image").get<std::string>();
        d.class_id = j.at("class").get<int>();
        d.box = box_from_json(j);
        d.conf = j.at("conf").get<double>();
        if (d.conf < 0.0 || d.conf > 1.0) {
            throw std::invalid_argument("confidence outside [0, 1]");
        }
        dets.push_back(std::move(d));
    });
    return dets;
}

std::vector<GroundTruth> read_ground_truth_jsonl(const std::filesystem::path& path) {
    std::vector<GroundTruth> gts;
    for_each_jsonl(path, [&](const nlohmann::json& j) {
        GroundTruth g;
        g.image = j.at("image").get<std::string>();
        g.class_id = j.at("class").get<int>();
        g.box = box_from_json(j);
        gts.push_back(std::move(g));
    });
    return gts;
}

std::string report_to_json(const EvalReport& report) {
    nlohmann::json j;
    j["thresholds"] = report.thresholds;
    j["iou_primary"] = report.thresholds.front();
    j["included_classes"] = report.included_classes;
    j["map_primary"] = report.map_primary;
    j["map_mean"] = report.map_mean;
    j["precision"] = report.precision;
    j["recall"] = report.recall;
    j["f1"] = report.f1;
    j["tp"] = report.tp;
    j["fp"] = report.fp;
    j["fn"] = report.fn;
    j["classes"] = nlohmann::json::array();
    for (const ClassReport& c : report.classes) {
        nlohmann::json cj;
        cj["class"] = c.class_id;
        cj["excluded"] = c.excluded;
        cj["n_gt"] = c.n_gt;
        cj["n_det"] = c.n_det;
        cj["ap_primary"] = c.ap_primary;
        cj["ap_mean"] = c.ap_mean;
        cj["ap_by_threshold"] = c.ap_by_threshold;
        cj["precision"] = c.precision;
        cj["recall"] = c.recall;
        cj["f1"] = c.f1;
        cj["tp"] = c.tp;
        cj["fp"] = c.fp;
        cj["fn"] = c.fn;
        j["classes"].push_back(std::move(cj));
    }
    return j.dump(2) + "\n";
}

std::string pr_curve_csv(const EvalReport& report) {
    std::string out = "class,recall,precision\n";
    char buf[96];
    for (const ClassReport& c : report.classes) {
        for (const PrPoint& p : c.pr) {
            std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g\n", c.class_id, p.recall,
                          p.precision);
            out += buf;
        }
    }
    return out;
}

} // namespace hg
