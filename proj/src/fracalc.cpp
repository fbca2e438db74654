#include "fph/fracalc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "fph/errors.hpp"

namespace fph {

namespace {

constexpr double kLanczosG = 7.0;
constexpr std::array<double, 9> kLanczos = {
    0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
    771.32342877765313,   -176.61502916214059,   12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};

}  // namespace

double gamma(double z) {
    if (z <= 0.0 && z == std::floor(z)) throw PoleError("gamma: pole at non-positive integer");
    if (z < 0.5) {
        // reflection
        return std::numbers::pi / (std::sin(std::numbers::pi * z) * gamma(1.0 - z));
    }
    z -= 1.0;
    double x = kLanczos[0];
    for (std::size_t i = 1; i < kLanczos.size(); ++i) x += kLanczos[i] / (z + static_cast<double>(i));
    const double t = z + kLanczosG + 0.5;
    return std::sqrt(2.0 * std::numbers::pi) * std::pow(t, z + 0.5) * std::exp(-t) * x;
}

std::vector<double> gl_coefficients(double order, std::size_t n) {
    if (n == 0) throw WindowError("gl_coefficients: n must be >= 1");
    std::vector<double> w(n);
    w[0] = 1.0;
    for (std::size_t k = 1; k < n; ++k)
        w[k] = w[k - 1] * (1.0 - (order + 1.0) / static_cast<double>(k));
    return w;
}

void gl_sum_serial(const double* w, const double* latest, std::size_t len,
                   std::size_t dim, double* out) {
    for (std::size_t j = 0; j < dim; ++j) out[j] = 0.0;
    for (std::size_t k = 0; k < len; ++k) {
        const double* row = latest - k * dim;
        for (std::size_t j = 0; j < dim; ++j) out[j] += w[k] * row[j];
    }
}

void gl_sum_omp(const double* w, const double* latest, std::size_t len,
                std::size_t dim, double* out) {
    for (std::size_t j = 0; j < dim; ++j) {
        double acc = 0.0;
        const long n = static_cast<long>(len);
        const long stride = static_cast<long>(dim);
        const double* col = latest + j;
#pragma omp parallel for reduction(+ : acc) schedule(static)
        for (long k = 0; k < n; ++k) acc += w[k] * col[-k * stride];
        out[j] = acc;
    }
}

FracOp::FracOp(double order, double step, std::size_t dim, std::size_t window, Anchor anchor)
    : order_(order), step_(step), scale_(std::pow(step, -order)), dim_(dim), window_(window),
      anchor_(anchor), coeffs_(), buf_(), base_(Vec::Zero(static_cast<Eigen::Index>(dim))) {
    if (!(step > 0.0)) throw RateError("FracOp: step must be positive");
    if (window == 0) throw WindowError("FracOp: window must be >= 1");
    if (dim == 0) throw DimensionError("FracOp: dimension must be >= 1");
    coeffs_ = gl_coefficients(order, window);
    buf_.assign(2 * window * dim, 0.0);
}

void FracOp::check(const Vec& sample) const {
    if (static_cast<std::size_t>(sample.size()) != dim_)
        throw DimensionError("FracOp: sample dimension mismatch");
}

Vec FracOp::baseline_for(const Vec& sample) const {
    if (has_base_) return base_;
    return anchored() ? sample : Vec::Zero(static_cast<Eigen::Index>(dim_));
}

Vec FracOp::evaluate(const Vec& newest, bool commit) const {
    const std::size_t slot = len_ == 0 ? 0 : (head_ + 1) % window_;
    const std::size_t len = std::min(len_ + 1, window_);
    double* lo = buf_.data() + slot * dim_;
    double* hi = buf_.data() + (slot + window_) * dim_;
    std::vector<double> saved_lo, saved_hi;
    if (!commit) {
        saved_lo.assign(lo, lo + dim_);
        saved_hi.assign(hi, hi + dim_);
    }
    for (std::size_t j = 0; j < dim_; ++j) lo[j] = hi[j] = newest[static_cast<Eigen::Index>(j)];

    Vec out(static_cast<Eigen::Index>(dim_));
    const double* latest = hi;
    if (kernel_ == Kernel::Parallel)
        gl_sum_omp(coeffs_.data(), latest, len, dim_, out.data());
    else
        gl_sum_serial(coeffs_.data(), latest, len, dim_, out.data());

    if (!commit) {
        std::copy(saved_lo.begin(), saved_lo.end(), lo);
        std::copy(saved_hi.begin(), saved_hi.end(), hi);
    }
    return scale_ * out;
}

Vec FracOp::push(const Vec& sample) {
    check(sample);
    if (!has_base_) {
        base_ = baseline_for(sample);
        has_base_ = true;
    }
    Vec out = evaluate(sample - base_, true);
    head_ = len_ == 0 ? 0 : (head_ + 1) % window_;
    len_ = std::min(len_ + 1, window_);
    return out;
}

Vec FracOp::peek(const Vec& sample) const {
    check(sample);
    return evaluate(sample - baseline_for(sample), false);
}

void FracOp::reset() {
    len_ = 0;
    head_ = 0;
    has_base_ = false;
}

void FracOp::reset(const Vec& baseline) {
    check(baseline);
    reset();
    base_ = anchored() ? baseline : Vec::Zero(static_cast<Eigen::Index>(dim_));
    has_base_ = true;
}

SampledSignal differintegrate(const SampledSignal& f, double order, std::size_t window,
                              Anchor anchor) {
    if (f.values.empty()) throw DimensionError("differintegrate: empty signal");
    FracOp op(order, f.step, static_cast<std::size_t>(f.values.front().size()), window, anchor);
    SampledSignal out{{}, f.step, f.start_time};
    out.values.reserve(f.values.size());
    for (const auto& v : f.values) out.values.push_back(op.push(v));
    return out;
}

}  // namespace fph
