#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "hgkit/bench.hpp"
#include "hgkit/eigencam.hpp"
#include "hgkit/emca.hpp"
#include "hgkit/hypergraph.hpp"
#include "hgkit/losses.hpp"
#include "hgkit/metrics.hpp"
#include "hgkit/parallel.hpp"
#include "hgkit/tensor_io.hpp"

#if defined(__unix__) || defined(__APPLE__)
#include <unistd.h>
#endif

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

bool styled_stderr() {
    if (std::getenv("HGKIT_NO_COLOR") != nullptr) {
        return false;
    }
#if defined(__unix__) || defined(__APPLE__)
    return isatty(fileno(stderr)) != 0;
#else
    return false;
#endif
}

void report_error(const std::string& msg) {
    if (styled_stderr()) {
        std::cerr << "\x1b[31merror:\x1b[0m " << msg << "\n";
    } else {
        std::cerr << "error: " << msg << "\n";
    }
}

nlohmann::json load_config(const std::string& path) {
    if (path.empty()) {
        return nlohmann::json::object();
    }
    std::ifstream in(path);
    if (!in) {
        throw UsageError("cannot open config file " + path);
    }
    try {
        return nlohmann::json::parse(in);
    } catch (const std::exception& e) {
        throw UsageError("config file " + path + ": " + e.what());
    }
}

// Precedence: explicit flag > config-file key > built-in default.
template <typename T>
void apply_config(const CLI::Option* opt, T& value, const nlohmann::json& cfg,
                  const char* key) {
    if (opt != nullptr && opt->count() > 0) {
        return;
    }
    if (cfg.contains(key)) {
        try {
            value = cfg.at(key).get<T>();
        } catch (const std::exception& e) {
            throw UsageError(std::string("config key '") + key + "': " + e.what());
        }
    }
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path + " for writing");
    }
    out << text;
    if (!out) {
        throw std::runtime_error("failed writing " + path);
    }
}

// Common knobs of the hypergraph-building subcommands.
struct MetricFlags {
    std::string metric = "manhattan";
    double delta = 0;      // 0 = derive from the percentile heuristic
    double percentile = 10.0;
    double tau = 0.5;
    double sigma = 0;      // 0 = median pairwise Euclidean distance
    std::uint64_t seed = 42;

    CLI::Option* metric_opt = nullptr;
    CLI::Option* delta_opt = nullptr;
    CLI::Option* percentile_opt = nullptr;
    CLI::Option* tau_opt = nullptr;
    CLI::Option* sigma_opt = nullptr;
    CLI::Option* seed_opt = nullptr;

    void add_to(CLI::App* cmd) {
        metric_opt = cmd->add_option("--metric", metric,
                                     "manhattan|euclidean|chebyshev|gaussian");
        delta_opt = cmd->add_option("--delta", delta, "distance threshold (> 0)");
        percentile_opt = cmd->add_option("--percentile", percentile,
                                         "delta percentile when --delta is absent");
        tau_opt = cmd->add_option("--tau", tau, "gaussian similarity threshold");
        sigma_opt = cmd->add_option("--sigma", sigma, "gaussian bandwidth");
        seed_opt = cmd->add_option("--seed", seed, "sampling seed");
    }

    void merge(const nlohmann::json& cfg) {
        apply_config(metric_opt, metric, cfg, "metric");
        apply_config(delta_opt, delta, cfg, "delta");
        apply_config(percentile_opt, percentile, cfg, "percentile");
        apply_config(tau_opt, tau, cfg, "tau");
        apply_config(sigma_opt, sigma, cfg, "sigma");
        apply_config(seed_opt, seed, cfg, "seed");
    }

    hg::MetricSpec resolve(const hg::NodeSet& nodes) const {
        hg::MetricSpec spec;
        try {
            spec.kind = hg::metric_from_name(metric);
            if (spec.kind == hg::Metric::gaussian_kernel) {
                spec.tau = tau;
                if (sigma > 0) {
                    spec.sigma = sigma;
                } else if (sigma != 0) {
                    throw UsageError("--sigma must be positive");
                } else {
                    spec.sigma =
                        hg::percentile_delta(nodes, hg::Metric::euclidean, 50.0, seed);
                }
                spec.validate();
                std::cerr << "metric: gaussian tau=" << spec.tau
                          << " sigma=" << spec.sigma << "\n";
            } else {
                if (delta > 0) {
                    spec.delta = delta;
                } else if (delta != 0) {
                    throw UsageError("--delta must be positive");
                } else {
                    spec.delta = hg::percentile_delta(nodes, spec.kind, percentile, seed);
                }
                spec.validate();
                std::cerr << "metric: " << metric << " delta=" << spec.delta << "\n";
            }
        } catch (const std::invalid_argument& e) {
            // Every invalid_argument here traces back to a flag value.
            throw UsageError(e.what());
        }
        return spec;
    }
};

hg::Tensor read_feature_map(const std::string& path) {
    const hg::Tensor t = hg::read_tensor(path);
    if (t.rank() != 4) {
        throw std::runtime_error(path + ": expected a rank-4 (1, C, H, W) tensor");
    }
    return t;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hgkit - hypergraph attention detection-math toolkit"};
    app.require_subcommand(1);
    std::function<void()> action;

    // --- hypergraph build / conv ---------------------------------------
    CLI::App* hypergraph = app.add_subcommand("hypergraph", "hypergraph construction and convolution");
    hypergraph->require_subcommand(1);

    {
        CLI::App* cmd = hypergraph->add_subcommand("build", "build a hypergraph from a feature map");
        auto in = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto config = std::make_shared<std::string>();
        auto threads = std::make_shared<int>(1);
        auto flags = std::make_shared<MetricFlags>();
        cmd->add_option("--in", *in, "input .hgtn feature map")->required();
        cmd->add_option("--out", *out, "output hypergraph JSON")->required();
        auto* threads_opt = cmd->add_option("--threads", *threads, "worker threads");
        cmd->add_option("--config", *config, "JSON config file");
        flags->add_to(cmd);
        cmd->callback([=] {
            const nlohmann::json cfg = load_config(*config);
            flags->merge(cfg);
            int t = *threads;
            apply_config(threads_opt, t, cfg, "threads");
            hg::set_thread_count(t);
            const hg::NodeSet nodes = hg::gridize(read_feature_map(*in));
            const hg::Hypergraph g = hg::build_hypergraph(nodes, flags->resolve(nodes));
            write_text(*out, hg::hypergraph_to_json(g));
            std::cerr << "hypergraph: " << g.node_count << " nodes, "
                      << g.incidence_count() << " incidences\n";
        });
    }

    {
        CLI::App* cmd = hypergraph->add_subcommand("conv", "run one hypergraph convolution over a feature map");
        auto in = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto theta_path = std::make_shared<std::string>();
        auto config = std::make_shared<std::string>();
        auto threads = std::make_shared<int>(1);
        auto flags = std::make_shared<MetricFlags>();
        cmd->add_option("--in", *in, "input .hgtn feature map")->required();
        cmd->add_option("--out", *out, "output .hgtn feature map")->required();
        cmd->add_option("--theta", *theta_path, "rank-2 (C, C') .hgtn weight; identity when absent");
        auto* threads_opt = cmd->add_option("--threads", *threads, "worker threads");
        cmd->add_option("--config", *config, "JSON config file");
        flags->add_to(cmd);
        cmd->callback([=] {
            const nlohmann::json cfg = load_config(*config);
            flags->merge(cfg);
            int t = *threads;
            apply_config(threads_opt, t, cfg, "threads");
            hg::set_thread_count(t);
            const hg::Tensor map = read_feature_map(*in);
            const std::int64_t c = map.dim(1);
            hg::Matrix theta = hg::identity_matrix(c);
            if (!theta_path->empty()) {
                const hg::Tensor tt = hg::read_tensor(*theta_path);
                if (tt.rank() != 2 || tt.dim(0) != c) {
                    throw std::runtime_error(*theta_path +
                                             ": theta must be rank-2 with C rows");
                }
                theta = hg::Matrix(tt.dim(0), tt.dim(1));
                for (std::int64_t i = 0; i < tt.size(); ++i) {
                    theta.data[static_cast<std::size_t>(i)] = tt[i];
                }
            }
            const hg::NodeSet nodes = hg::gridize(map);
            const hg::MetricSpec spec = flags->resolve(nodes);
            hg::write_tensor(hg::hyperconv_layer(map, spec, theta), *out);
        });
    }

    // --- emca forward ----------------------------------------------------
    CLI::App* emca = app.add_subcommand("emca", "multi-scale context attention");
    emca->require_subcommand(1);
    {
        CLI::App* cmd = emca->add_subcommand("forward", "run the attention block over a feature map");
        auto in = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto weights = std::make_shared<std::string>();
        auto config = std::make_shared<std::string>();
        auto groups = std::make_shared<std::int64_t>(0);
        auto kernel = std::make_shared<std::int64_t>(11);
        auto seed = std::make_shared<std::uint64_t>(42);
        auto threads = std::make_shared<int>(1);
        cmd->add_option("--in", *in, "input .hgtn feature map")->required();
        cmd->add_option("--out", *out, "output .hgtn feature map")->required();
        cmd->add_option("--weights", *weights, "JSON weight manifest; seeded init when absent");
        auto* groups_opt = cmd->add_option("--groups", *groups, "attention groups (0 = auto)");
        auto* kernel_opt = cmd->add_option("--kernel", *kernel, "band kernel size (odd)");
        auto* seed_opt = cmd->add_option("--seed", *seed, "weight-init seed");
        auto* threads_opt = cmd->add_option("--threads", *threads, "worker threads");
        cmd->add_option("--config", *config, "JSON config file");
        cmd->callback([=] {
            const nlohmann::json cfg = load_config(*config);
            std::int64_t g = *groups;
            std::int64_t k = *kernel;
            std::uint64_t s = *seed;
            int t = *threads;
            apply_config(groups_opt, g, cfg, "groups");
            apply_config(kernel_opt, k, cfg, "kernel");
            apply_config(seed_opt, s, cfg, "seed");
            apply_config(threads_opt, t, cfg, "threads");
            hg::set_thread_count(t);

            const hg::Tensor map = read_feature_map(*in);
            const std::int64_t channels = map.dim(1);
            if (g == 0) {
                g = hg::default_group_count(channels);
            }
            if (g < 1 || channels % g != 0) {
                throw UsageError("--groups must divide the channel count (" +
                                 std::to_string(channels) + ")");
            }
            if (k < 3 || k % 2 == 0) {
                throw UsageError("--kernel must be odd and >= 3");
            }
            hg::EmaConfig ema_cfg;
            hg::CaaConfig caa_cfg;
            if (!weights->empty()) {
                std::ifstream wf(*weights);
                if (!wf) {
                    throw std::runtime_error("cannot open " + *weights);
                }
                std::stringstream buf;
                buf << wf.rdbuf();
                std::tie(ema_cfg, caa_cfg) = hg::emca_weights_from_json(buf.str());
            } else {
                ema_cfg = hg::ema_random(channels, g, s);
                caa_cfg = hg::caa_random(channels, k, s + 1);
                std::cerr << "emca: seeded weights (groups=" << g << " kernel=" << k
                          << " seed=" << s << ")\n";
            }
            hg::write_tensor(hg::emca_forward(map, ema_cfg, caa_cfg), *out);
        });
    }

    // --- loss eval ---------------------------------------------------------
    CLI::App* loss = app.add_subcommand("loss", "detection loss evaluation");
    loss->require_subcommand(1);
    {
        CLI::App* cmd = loss->add_subcommand("eval", "evaluate the composite loss on a JSON case");
        auto in = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto config = std::make_shared<std::string>();
        auto l_cls = std::make_shared<double>(3.0);
        auto l_box = std::make_shared<double>(4.0);
        auto l_dfl = std::make_shared<double>(1.5);
        cmd->add_option("--in", *in, "input JSON case")->required();
        cmd->add_option("--out", *out, "output JSON (stdout when absent)");
        auto* cls_opt = cmd->add_option("--lambda-cls", *l_cls, "classification weight");
        auto* box_opt = cmd->add_option("--lambda-box", *l_box, "box weight");
        auto* dfl_opt = cmd->add_option("--lambda-dfl", *l_dfl, "distribution-focal weight");
        cmd->add_option("--config", *config, "JSON config file");
        cmd->callback([=] {
            const nlohmann::json cfg = load_config(*config);
            std::ifstream f(*in);
            if (!f) {
                throw std::runtime_error("cannot open " + *in);
            }
            const nlohmann::json j = nlohmann::json::parse(f);

            hg::LossWeights w;
            if (j.contains("weights")) {
                w.cls = j["weights"].value("cls", w.cls);
                w.box = j["weights"].value("box", w.box);
                w.dfl = j["weights"].value("dfl", w.dfl);
            }
            if (cfg.contains("lambda_cls")) w.cls = cfg["lambda_cls"].get<double>();
            if (cfg.contains("lambda_box")) w.box = cfg["lambda_box"].get<double>();
            if (cfg.contains("lambda_dfl")) w.dfl = cfg["lambda_dfl"].get<double>();
            if (cls_opt->count() > 0) w.cls = *l_cls;
            if (box_opt->count() > 0) w.box = *l_box;
            if (dfl_opt->count() > 0) w.dfl = *l_dfl;

            const auto probs = j.at("probs").get<std::vector<double>>();
            const auto labels = j.at("labels").get<std::vector<double>>();
            const hg::BceResult bce = hg::bce_loss(probs, labels);

            auto parse_box = [](const nlohmann::json& b) {
                return hg::BBox{b.at("cx").get<double>(), b.at("cy").get<double>(),
                                b.at("w").get<double>(), b.at("h").get<double>()};
            };
            const hg::CiouResult ciou =
                hg::ciou_box_loss(parse_box(j.at("pred")), parse_box(j.at("gt")));

            hg::DflBins bins;
            bins.positions = j.at("bins").at("positions").get<std::vector<double>>();
            bins.probs = j.at("bins").at("probs").get<std::vector<double>>();
            const double target = j.at("bins").at("target").get<double>();
            const hg::DflResult dfl = hg::dfl_loss(bins, target);

            nlohmann::json result;
            result["l_cls"] = bce.loss;
            result["l_box"] = ciou.loss;
            result["l_dfl"] = dfl.loss;
            result["iou"] = ciou.iou;
            result["total"] = hg::total_loss(bce.loss, ciou.loss, dfl.loss, w);
            result["weights"] = {{"cls", w.cls}, {"box", w.box}, {"dfl", w.dfl}};
            write_text(*out, result.dump(2) + "\n");
        });
    }

    // --- metrics eval -------------------------------------------------------
    CLI::App* metrics = app.add_subcommand("metrics", "detection metric evaluation");
    metrics->require_subcommand(1);
    {
        CLI::App* cmd = metrics->add_subcommand("eval", "evaluate detections against ground truth");
        auto dets_path = std::make_shared<std::string>();
        auto gts_path = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto pr_csv = std::make_shared<std::string>();
        auto config = std::make_shared<std::string>();
        auto ious = std::make_shared<std::vector<double>>();
        auto threads = std::make_shared<int>(1);
        cmd->add_option("--dets", *dets_path, "detections JSONL")->required();
        cmd->add_option("--gts", *gts_path, "ground-truth JSONL")->required();
        cmd->add_option("--out", *out, "report JSON (stdout when absent)");
        cmd->add_option("--pr-csv", *pr_csv, "PR-curve CSV path");
        auto* iou_opt = cmd->add_option("--iou", *ious, "IoU threshold list (default 0.50:0.05:0.95)");
        auto* threads_opt = cmd->add_option("--threads", *threads, "worker threads");
        cmd->add_option("--config", *config, "JSON config file");
        cmd->callback([=] {
            const nlohmann::json cfg = load_config(*config);
            std::vector<double> thresholds = *ious;
            apply_config(iou_opt, thresholds, cfg, "iou");
            if (thresholds.empty()) {
                thresholds = hg::iou_sweep();
            }
            int t = *threads;
            apply_config(threads_opt, t, cfg, "threads");
            hg::set_thread_count(t);

            const auto dets = hg::read_detections_jsonl(*dets_path);
            const auto gts = hg::read_ground_truth_jsonl(*gts_path);
            int num_classes = 1;
            for (const auto& d : dets) {
                num_classes = std::max(num_classes, d.class_id + 1);
            }
            for (const auto& g : gts) {
                num_classes = std::max(num_classes, g.class_id + 1);
            }
            const hg::EvalReport report = hg::evaluate(dets, gts, thresholds, num_classes);
            write_text(*out, hg::report_to_json(report));
            if (!pr_csv->empty()) {
                write_text(*pr_csv, hg::pr_curve_csv(report));
            }
        });
    }

    // --- cam ---------------------------------------------------------------
    {
        CLI::App* cmd = app.add_subcommand("cam", "principal-component activation heatmap");
        auto in = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto csv = std::make_shared<std::string>();
        auto config = std::make_shared<std::string>();
        auto height = std::make_shared<std::int64_t>(0);
        auto width = std::make_shared<std::int64_t>(0);
        cmd->add_option("--in", *in, "input .hgtn activation")->required();
        cmd->add_option("--out", *out, "output PGM (P5) heatmap")->required();
        cmd->add_option("--csv", *csv, "optional CSV dump");
        auto* h_opt = cmd->add_option("--height", *height, "output height (0 = source)");
        auto* w_opt = cmd->add_option("--width", *width, "output width (0 = source)");
        cmd->add_option("--config", *config, "JSON config file");
        cmd->callback([=] {
            const nlohmann::json cfg = load_config(*config);
            std::int64_t oh = *height, ow = *width;
            apply_config(h_opt, oh, cfg, "height");
            apply_config(w_opt, ow, cfg, "width");
            const hg::Tensor act = read_feature_map(*in);
            if (oh <= 0) {
                oh = act.dim(2);
            }
            if (ow <= 0) {
                ow = act.dim(3);
            }
            const hg::Heatmap map = hg::eigen_cam(act, oh, ow);
            if (map.degenerate) {
                std::cerr << "cam: degenerate activation, all-zero heatmap\n";
            }
            hg::write_pgm(map, *out);
            if (!csv->empty()) {
                write_text(*csv, hg::heatmap_csv(map));
            }
        });
    }

    // --- bench ---------------------------------------------------------------
    {
        CLI::App* cmd = app.add_subcommand("bench", "dense vs sparse hypergraph construction benchmark");
        auto n = std::make_shared<std::int64_t>(256);
        auto c = std::make_shared<std::int64_t>(16);
        auto reps = std::make_shared<int>(5);
        auto seed = std::make_shared<std::uint64_t>(42);
        auto percentile = std::make_shared<double>(10.0);
        auto threads = std::make_shared<int>(1);
        auto out = std::make_shared<std::string>();
        auto config = std::make_shared<std::string>();
        auto metric_names = std::make_shared<std::vector<std::string>>();
        auto* n_opt = cmd->add_option("--n", *n, "node count");
        auto* c_opt = cmd->add_option("--c", *c, "feature dimension");
        auto* reps_opt = cmd->add_option("--reps", *reps, "timed repetitions (>= 3)");
        auto* seed_opt = cmd->add_option("--seed", *seed, "feature seed");
        auto* pct_opt = cmd->add_option("--percentile", *percentile, "delta percentile");
        auto* threads_opt = cmd->add_option("--threads", *threads, "worker threads");
        cmd->add_option("--metric", *metric_names, "metrics to time (default: all four)");
        cmd->add_option("--out", *out, "CSV output (stdout when absent)");
        cmd->add_option("--config", *config, "JSON config file");
        cmd->callback([=] {
            const nlohmann::json cfg = load_config(*config);
            std::int64_t nn = *n, cc = *c;
            int r = *reps, t = *threads;
            std::uint64_t s = *seed;
            double q = *percentile;
            std::vector<std::string> names = *metric_names;
            apply_config(n_opt, nn, cfg, "n");
            apply_config(c_opt, cc, cfg, "c");
            apply_config(reps_opt, r, cfg, "reps");
            apply_config(seed_opt, s, cfg, "seed");
            apply_config(pct_opt, q, cfg, "percentile");
            apply_config(threads_opt, t, cfg, "threads");
            hg::set_thread_count(t);

            std::vector<hg::Metric> metrics_list;
            try {
                if (names.empty()) {
                    metrics_list = {hg::Metric::manhattan, hg::Metric::euclidean,
                                    hg::Metric::chebyshev, hg::Metric::gaussian_kernel};
                } else {
                    for (const std::string& name : names) {
                        metrics_list.push_back(hg::metric_from_name(name));
                    }
                }
                if (nn < 2 || r < 3) {
                    throw UsageError("bench needs --n >= 2 and --reps >= 3");
                }
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
            const auto rows = hg::bench_distances(nn, cc, metrics_list, r, s, q);
            write_text(*out, hg::bench_csv(rows));
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        report_error(e.what());
        std::cerr << app.help();
        return 2;
    } catch (const UsageError& e) {
        report_error(e.what());
        return 2;
    } catch (const std::exception& e) {
        report_error(e.what());
        return 1;
    }
    return 0;
}
