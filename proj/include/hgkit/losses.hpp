#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

namespace hg {

/// Center-format box with strictly positive extents.
struct BBox {
    double cx = 0, cy = 0, w = 1, h = 1;

    double x1() const { return cx - w / 2; }
    double y1() const { return cy - h / 2; }
    double x2() const { return cx + w / 2; }
    double y2() const { return cy + h / 2; }

    void validate() const;
};

double box_iou(const BBox& a, const BBox& b);

struct LossWeights {
    double cls = 3.0;
    double box = 4.0;
    double dfl = 1.5;
};

struct BceResult {
    double loss = 0;
    std::vector<double> grad; // d loss / d p, after clamping
};

/// Mean binary cross-entropy. Probabilities are clamped to
/// [1e-7, 1 - 1e-7]; labels must be exactly 0 or 1.
BceResult bce_loss(std::span<const double> p, std::span<const double> labels);

struct CiouResult {
    double loss = 0;
    double iou = 0;
    double ciou = 0;
    std::array<double, 4> grad{}; // d loss / d (cx, cy, w, h) of pred
};

/// 1 - CIoU, where CIoU = IoU - d^2/c^2 - alpha^2/(1 - IoU + alpha) and
/// alpha = (4/pi^2)(atan(w_gt/h_gt) - atan(w/h))^2. The aspect term is 0
/// when alpha == 0; denominators carry an epsilon of 1e-7.
CiouResult ciou_box_loss(const BBox& pred, const BBox& gt);

/// Discrete distribution over strictly increasing bin positions.
struct DflBins {
    std::vector<double> positions;
    std::vector<double> probs; // each > 0, sums to 1 within 1e-9

    void validate() const;
};

struct DflResult {
    double loss = 0;
    std::vector<double> grad;
};

/// Cross-entropy on the two bins bracketing `target`, weighted by the linear
/// interpolation coefficients. Gradient is taken w.r.t. the probabilities and
/// is nonzero only at the two bracketing bins.
DflResult dfl_loss(const DflBins& bins, double target);

/// Same loss with probabilities given as softmax(logits); gradient is taken
/// w.r.t. the logits (S - c, with c the interpolation coefficient vector).
DflResult dfl_loss_logits(std::span<const double> positions,
                          std::span<const double> logits, double target);

double total_loss(double l_cls, double l_box, double l_dfl, const LossWeights& w);

struct GradCheckRow {
    double analytic = 0;
    double numeric = 0;
    double rel_error = 0;
};

struct GradCheckReport {
    double max_rel_error = 0;
    std::vector<GradCheckRow> rows;
};

/// Central-difference check of an analytic gradient: per coordinate,
/// numeric = (f(x + h e_i) - f(x - h e_i)) / 2h and
/// rel_error = |analytic - numeric| / max(1, |analytic|, |numeric|).
GradCheckReport grad_check(const std::function<double(std::span<const double>)>& f,
                           std::span<const double> x,
                           std::span<const double> analytic_grad,
                           double step = 1e-5);

} // namespace hg
