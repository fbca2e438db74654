#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace fph {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

double gamma(double z);

std::vector<double> gl_coefficients(double order, std::size_t n);

// Raw GL convolution: out[j] = sum_k w[k] * rows[latest - k][j], rows stored
// chronologically with `dim` doubles each. `latest` points at the newest row.
void gl_sum_serial(const double* w, const double* latest, std::size_t len,
                   std::size_t dim, double* out);
void gl_sum_omp(const double* w, const double* latest, std::size_t len,
                std::size_t dim, double* out);

enum class Anchor {
    Baseline,  // differintegrate f - f(t0) for positive orders (Caputo-like)
    None,      // plain Grunwald-Letnikov
};

enum class Kernel { Serial, Parallel };

struct SampledSignal {
    std::vector<Vec> values;
    double step = 1e-3;
    double start_time = 0.0;
};

class FracOp {
public:
    static constexpr std::size_t kDefaultWindow = 10000;

    FracOp() = default;
    FracOp(double order, double step, std::size_t dim,
           std::size_t window = kDefaultWindow, Anchor anchor = Anchor::Baseline);

    double order() const { return order_; }
    double step() const { return step_; }
    std::size_t window() const { return window_; }
    std::size_t dim() const { return dim_; }
    std::size_t size() const { return len_; }
    const std::vector<double>& coeffs() const { return coeffs_; }
    bool anchored() const { return anchor_ == Anchor::Baseline && order_ > 0.0; }

    void set_kernel(Kernel k) { kernel_ = k; }

    Vec push(const Vec& sample);
    // Output as if `sample` were pushed, without committing it.
    Vec peek(const Vec& sample) const;

    void reset();
    // Clear history and anchor the next samples to `baseline`.
    void reset(const Vec& baseline);

private:
    void check(const Vec& sample) const;
    Vec baseline_for(const Vec& sample) const;
    Vec evaluate(const Vec& newest, bool commit) const;

    double order_ = 0.0;
    double step_ = 1e-3;
    double scale_ = 1.0;
    std::size_t dim_ = 0;
    std::size_t window_ = 1;
    Anchor anchor_ = Anchor::Baseline;
    Kernel kernel_ = Kernel::Serial;
    std::vector<double> coeffs_;
    // Each row is written twice (at i and i + window) so the newest `len_`
    // rows are always contiguous. peek() borrows the next slot and restores it.
    mutable std::vector<double> buf_;
    std::size_t head_ = 0;  // slot of the newest row
    std::size_t len_ = 0;
    bool has_base_ = false;
    Vec base_;
};

// Offline helper: apply a fresh operator to every sample of `f`.
SampledSignal differintegrate(const SampledSignal& f, double order,
                              std::size_t window = FracOp::kDefaultWindow,
                              Anchor anchor = Anchor::Baseline);

}  // namespace fph
