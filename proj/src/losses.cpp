#include "hgkit/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hg {

namespace {
constexpr double kEps = 1e-7;
}

void BBox::validate() const {
    if (!(w > 0.0) || !(h > 0.0)) {
        throw std::invalid_argument("box extents must be positive");
    }
}

double box_iou(const BBox& a, const BBox& b) {
    const double iw = std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1());
    const double ih = std::min(a.y2(), b.y2()) - std::max(a.y1(), b.y1());
    if (iw <= 0.0 || ih <= 0.0) {
        return 0.0;
    }
    const double inter = iw * ih;
    return inter / (a.w * a.h + b.w * b.h - inter);
}

BceResult bce_loss(std::span<const double> p, std::span<const double> labels) {
    if (p.size() != labels.size()) {
        throw std::invalid_argument("bce_loss: probability/label length mismatch");
    }
    if (p.empty()) {
        throw std::invalid_argument("bce_loss: empty input");
    }
    const auto n = static_cast<double>(p.size());
    BceResult r;
    r.grad.resize(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double y = labels[i];
        if (y != 0.0 && y != 1.0) {
            throw std::invalid_argument("bce_loss: labels must be 0 or 1");
        }
        const double pc = std::clamp(p[i], kEps, 1.0 - kEps);
        r.loss += -(y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
        r.grad[i] = (pc - y) / (pc * (1.0 - pc)) / n;
    }
    r.loss /= n;
    return r;
}

CiouResult ciou_box_loss(const BBox& pred, const BBox& gt) {
    pred.validate();
    gt.validate();

    const double px1 = pred.x1(), px2 = pred.x2(), py1 = pred.y1(), py2 = pred.y2();
    const double gx1 = gt.x1(), gx2 = gt.x2(), gy1 = gt.y1(), gy2 = gt.y2();

    // Intersection / union and their derivatives w.r.t. (cx, cy, w, h).
    // Exact min/max ties take the symmetric subgradient (weight 1/2), which
    // is what central differences converge to at those points.
    const auto less = [](double a, double b) {
        return a < b ? 1.0 : (a == b ? 0.5 : 0.0);
    };
    const double iw = std::min(px2, gx2) - std::max(px1, gx1);
    const double ih = std::min(py2, gy2) - std::max(py1, gy1);
    const bool overlaps = iw > 0.0 && ih > 0.0;
    const double inter = overlaps ? iw * ih : 0.0;

    const double diw_dcx = less(px2, gx2) - less(gx1, px1);
    const double diw_dw = 0.5 * less(px2, gx2) + 0.5 * less(gx1, px1);
    const double dih_dcy = less(py2, gy2) - less(gy1, py1);
    const double dih_dh = 0.5 * less(py2, gy2) + 0.5 * less(gy1, py1);

    double dinter[4] = {0, 0, 0, 0}; // cx, cy, w, h
    if (overlaps) {
        dinter[0] = diw_dcx * ih;
        dinter[1] = iw * dih_dcy;
        dinter[2] = diw_dw * ih;
        dinter[3] = iw * dih_dh;
    }

    const double uni = pred.w * pred.h + gt.w * gt.h - inter;
    const double duni[4] = {-dinter[0], -dinter[1], pred.h - dinter[2], pred.w - dinter[3]};

    // union and the enclosing diagonal are strictly positive for valid
    // boxes; only the aspect denominator can vanish and carries the epsilon
    const double uden = uni;
    const double iou = inter / uden;
    double diou[4];
    for (int k = 0; k < 4; ++k) {
        diou[k] = (dinter[k] * uden - inter * duni[k]) / (uden * uden);
    }

    // Center-distance penalty d^2 / c^2.
    const double dx = pred.cx - gt.cx, dy = pred.cy - gt.cy;
    const double d2 = dx * dx + dy * dy;
    const double dd2[4] = {2.0 * dx, 2.0 * dy, 0.0, 0.0};

    const double cw = std::max(px2, gx2) - std::min(px1, gx1);
    const double ch = std::max(py2, gy2) - std::min(py1, gy1);
    const double dcw_dcx = less(gx2, px2) - less(px1, gx1);
    const double dcw_dw = 0.5 * less(gx2, px2) + 0.5 * less(px1, gx1);
    const double dch_dcy = less(gy2, py2) - less(py1, gy1);
    const double dch_dh = 0.5 * less(gy2, py2) + 0.5 * less(py1, gy1);

    const double c2 = cw * cw + ch * ch;
    const double dc2[4] = {2.0 * cw * dcw_dcx, 2.0 * ch * dch_dcy,
                           2.0 * cw * dcw_dw, 2.0 * ch * dch_dh};

    const double cden = c2;
    const double dist_term = d2 / cden;
    double ddist[4];
    for (int k = 0; k < 4; ++k) {
        ddist[k] = (dd2[k] * cden - d2 * dc2[k]) / (cden * cden);
    }

    // Aspect penalty alpha^2 / (1 - IoU + alpha), zero at alpha == 0.
    const double t = std::atan(gt.w / gt.h) - std::atan(pred.w / pred.h);
    const double four_over_pi2 = 4.0 / (M_PI * M_PI);
    const double alpha = four_over_pi2 * t * t;
    const double wh2 = pred.w * pred.w + pred.h * pred.h;
    const double dt[4] = {0.0, 0.0, -pred.h / wh2, pred.w / wh2};
    double dalpha[4];
    for (int k = 0; k < 4; ++k) {
        dalpha[k] = 2.0 * four_over_pi2 * t * dt[k];
    }

    const double aden = 1.0 - iou + alpha + kEps;
    const double aspect = alpha == 0.0 ? 0.0 : alpha * alpha / aden;
    double daspect[4];
    for (int k = 0; k < 4; ++k) {
        daspect[k] = (2.0 * alpha * dalpha[k] * aden -
                      alpha * alpha * (-diou[k] + dalpha[k])) /
                     (aden * aden);
    }

    CiouResult r;
    r.iou = iou;
    r.ciou = iou - dist_term - aspect;
    r.loss = 1.0 - r.ciou;
    for (int k = 0; k < 4; ++k) {
        r.grad[static_cast<std::size_t>(k)] = -diou[k] + ddist[k] + daspect[k];
    }
    return r;
}

void DflBins::validate() const {
    if (positions.size() < 2 || probs.size() != positions.size()) {
        throw std::invalid_argument("dfl bins: need >= 2 positions with matching probabilities");
    }
    for (std::size_t i = 1; i < positions.size(); ++i) {
        if (!(positions[i] > positions[i - 1])) {
            throw std::invalid_argument("dfl bins: positions must be strictly increasing");
        }
    }
    double sum = 0;
    for (double s : probs) {
        if (!(s > 0.0)) {
            throw std::invalid_argument("dfl bins: probabilities must be positive");
        }
        sum += s;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw std::invalid_argument("dfl bins: probabilities must sum to 1");
    }
}

namespace {

// Index n of the bracket [y_n, y_{n+1}] containing the target.
std::size_t bracket_index(std::span<const double> positions, double target) {
    if (target < positions.front() || target > positions.back()) {
        throw std::invalid_argument("dfl: target outside the bin range");
    }
    std::size_t n = 0;
    while (n + 2 < positions.size() && positions[n + 1] <= target) {
        ++n;
    }
    return n;
}

} // namespace

DflResult dfl_loss(const DflBins& bins, double target) {
    bins.validate();
    const std::size_t n = bracket_index(bins.positions, target);
    const double width = bins.positions[n + 1] - bins.positions[n];
    const double w_lo = (bins.positions[n + 1] - target) / width;
    const double w_hi = (target - bins.positions[n]) / width;
    const double s_lo = std::max(bins.probs[n], kEps);
    const double s_hi = std::max(bins.probs[n + 1], kEps);

    DflResult r;
    r.loss = -w_lo * std::log(s_lo) - w_hi * std::log(s_hi);
    r.grad.assign(bins.probs.size(), 0.0);
    r.grad[n] = -w_lo / s_lo;
    r.grad[n + 1] = -w_hi / s_hi;
    return r;
}

DflResult dfl_loss_logits(std::span<const double> positions,
                          std::span<const double> logits, double target) {
    if (positions.size() < 2 || logits.size() != positions.size()) {
        throw std::invalid_argument("dfl: need >= 2 positions with matching logits");
    }
    for (std::size_t i = 1; i < positions.size(); ++i) {
        if (!(positions[i] > positions[i - 1])) {
            throw std::invalid_argument("dfl: positions must be strictly increasing");
        }
    }
    const std::size_t n = bracket_index(positions, target);

    double mx = logits[0];
    for (double z : logits) {
        mx = std::max(mx, z);
    }
    std::vector<double> s(logits.size());
    double sum = 0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        s[i] = std::exp(logits[i] - mx);
        sum += s[i];
    }
    for (double& v : s) {
        v /= sum;
    }

    const double width = positions[n + 1] - positions[n];
    const double w_lo = (positions[n + 1] - target) / width;
    const double w_hi = (target - positions[n]) / width;

    DflResult r;
    r.loss = -w_lo * std::log(std::max(s[n], kEps)) -
             w_hi * std::log(std::max(s[n + 1], kEps));
    // With S = softmax(z) and the coefficients summing to 1, dL/dz = S - c.
    r.grad = s;
    r.grad[n] -= w_lo;
    r.grad[n + 1] -= w_hi;
    return r;
}

double total_loss(double l_cls, double l_box, double l_dfl, const LossWeights& w) {
    if (w.cls < 0.0 || w.box < 0.0 || w.dfl < 0.0) {
        throw std::invalid_argument("loss weights must be nonnegative");
    }
    return w.cls * l_cls + w.box * l_box + w.dfl * l_dfl;
}

GradCheckReport grad_check(const std::function<double(std::span<const double>)>& f,
                           std::span<const double> x,
                           std::span<const double> analytic_grad, double step) {
    if (x.size() != analytic_grad.size()) {
        throw std::invalid_argument("grad_check: gradient length mismatch");
    }
    if (!(step > 0.0)) {
        throw std::invalid_argument("grad_check: step must be positive");
    }
    GradCheckReport report;
    std::vector<double> probe(x.begin(), x.end());
    for (std::size_t i = 0; i < probe.size(); ++i) {
        const double orig = probe[i];
        probe[i] = orig + step;
        const double fp = f(probe);
        probe[i] = orig - step;
        const double fm = f(probe);
        probe[i] = orig;

        GradCheckRow row;
        row.analytic = analytic_grad[i];
        row.numeric = (fp - fm) / (2.0 * step);
        row.rel_error = std::abs(row.analytic - row.numeric) /
                        std::max({1.0, std::abs(row.analytic), std::abs(row.numeric)});
        report.max_rel_error = std::max(report.max_rel_error, row.rel_error);
        report.rows.push_back(row);
    }
    return report;
}

} // namespace hg
