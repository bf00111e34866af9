#include "extprof/ode.hpp"

#include <algorithm>
#include <cmath>

namespace extprof {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::step_underflow: return "step_underflow";
    case Errc::max_steps_exceeded: return "max_steps_exceeded";
    case Errc::non_finite_rhs: return "non_finite_rhs";
    case Errc::out_of_span: return "out_of_span";
    case Errc::too_few_nodes: return "too_few_nodes";
    case Errc::invariant_violation: return "invariant_violation";
    case Errc::shape_violation: return "shape_violation";
    case Errc::insufficient_range: return "insufficient_range";
    case Errc::range_mismatch: return "range_mismatch";
    case Errc::mismatched_params: return "mismatched_params";
    case Errc::not_converged: return "not_converged";
    case Errc::wrong_label: return "wrong_label";
    case Errc::bracket_failure: return "bracket_failure";
    case Errc::inconsistent_classification: return "inconsistent_classification";
    case Errc::non_finite_payload: return "non_finite_payload";
    case Errc::io_failure: return "io_failure";
  }
  return "unknown";
}

SolverError::SolverError(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void raise(Errc code, const std::string& what) { throw SolverError(code, what); }

void validate_controls(const StepControl& ctrl) {
  const bool tol_ok = ctrl.abs_tol >= 0.0 && ctrl.rel_tol >= 0.0 &&
                      (ctrl.abs_tol > 0.0 || ctrl.rel_tol > 0.0);
  const bool h_ok = ctrl.h_min > 0.0 && ctrl.h_min <= ctrl.h_init && ctrl.h_init <= ctrl.h_max;
  if (!tol_ok || !h_ok || ctrl.max_steps < 1) {
    throw std::invalid_argument("StepControl: need h_min <= h_init <= h_max, "
                                "non-negative tolerances (one positive), max_steps >= 1");
  }
}

void Trajectory::append_node(double t, std::span<const double> y, std::span<const double> f) {
  if (!t_.empty() && !(t > t_.back())) {
    throw std::invalid_argument("Trajectory: node times must be strictly increasing");
  }
  t_.push_back(t);
  y_.insert(y_.end(), y.begin(), y.end());
  f_.insert(f_.end(), f.begin(), f.end());
}

void Trajectory::append_dense(double h, std::span<const double> r2, std::span<const double> r3,
                              std::span<const double> r4, std::span<const double> r5) {
  dense_.push_back(h);
  dense_.insert(dense_.end(), r2.begin(), r2.end());
  dense_.insert(dense_.end(), r3.begin(), r3.end());
  dense_.insert(dense_.end(), r4.begin(), r4.end());
  dense_.insert(dense_.end(), r5.begin(), r5.end());
}

void Trajectory::replace_last_node(double t, std::span<const double> y,
                                   std::span<const double> f) {
  if (size() < 2 || !(t > t_[size() - 2])) {
    throw std::invalid_argument("Trajectory: bad event truncation");
  }
  t_.back() = t;
  std::copy(y.begin(), y.end(), y_.end() - static_cast<std::ptrdiff_t>(dim_));
  std::copy(f.begin(), f.end(), f_.end() - static_cast<std::ptrdiff_t>(dim_));
}

void Trajectory::set_stop(StopReason reason, std::optional<EventHit> hit) {
  stop_ = reason;
  event_ = hit;
}

void Trajectory::extend(Trajectory&& tail) {
  if (tail.dim_ != dim_ || tail.empty() || empty()) {
    throw std::invalid_argument("Trajectory::extend: incompatible pieces");
  }
  if (tail.front_time() != back_time()) {
    throw std::invalid_argument("Trajectory::extend: continuation must start at the final node");
  }
  for (std::size_t i = 1; i < tail.size(); ++i) {
    append_node(tail.time(i), tail.state(i), tail.derivative(i));
  }
  dense_.insert(dense_.end(), tail.dense_.begin(), tail.dense_.end());
  stop_ = tail.stop_;
  event_ = tail.event_;
}

std::size_t Trajectory::segment_index(double t) const {
  if (size() < 2 || t < t_.front() || t > t_.back()) {
    raise(Errc::out_of_span, "dense query at t=" + std::to_string(t) + " outside [" +
                                 std::to_string(t_.front()) + ", " + std::to_string(t_.back()) +
                                 "]");
  }
  const auto it = std::upper_bound(t_.begin(), t_.end(), t);
  std::size_t idx = static_cast<std::size_t>(it - t_.begin());
  if (idx == 0) idx = 1;
  if (idx >= size()) idx = size() - 1;
  return idx - 1;  // interval [t_{idx-1}, t_idx]
}

void Trajectory::dense_eval(double t, std::span<double> out) const {
  if (empty()) raise(Errc::out_of_span, "dense query on empty trajectory");
  // Exact node queries return stored states.
  const auto hit = std::lower_bound(t_.begin(), t_.end(), t);
  if (hit != t_.end() && *hit == t) {
    const std::size_t i = static_cast<std::size_t>(hit - t_.begin());
    auto s = state(i);
    std::copy(s.begin(), s.end(), out.begin());
    return;
  }
  const std::size_t seg = segment_index(t);
  const double* rec = dense_.data() + seg * (1 + 4 * dim_);
  const double h = rec[0];
  const double th = (t - t_[seg]) / h;
  const double th1 = 1.0 - th;
  const double* r2 = rec + 1;
  const double* r3 = r2 + dim_;
  const double* r4 = r3 + dim_;
  const double* r5 = r4 + dim_;
  for (std::size_t i = 0; i < dim_; ++i) {
    out[i] = state(seg, i) + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])));
  }
}

std::vector<double> Trajectory::dense_eval(double t) const {
  std::vector<double> out(dim_);
  dense_eval(t, std::span<double>(out));
  return out;
}

double Trajectory::dense_eval(double t, std::size_t comp) const {
  std::vector<double> out(dim_);
  dense_eval(t, std::span<double>(out));
  return out[comp];
}

void Trajectory::dense_derivative(double t, std::span<double> out) const {
  if (size() < 2) raise(Errc::out_of_span, "dense derivative on degenerate trajectory");
  double tq = t;
  const std::size_t seg = segment_index(tq);
  const double* rec = dense_.data() + seg * (1 + 4 * dim_);
  const double h = rec[0];
  const double th = (tq - t_[seg]) / h;
  const double* r2 = rec + 1;
  const double* r3 = r2 + dim_;
  const double* r4 = r3 + dim_;
  const double* r5 = r4 + dim_;
  // Expanded quartic u = y + (A+B)th + (-B+C+D)th^2 + (-C-2D)th^3 + D th^4
  // with A=r2, B=r3, C=r4, D=r5; differentiate in th, divide by h.
  for (std::size_t i = 0; i < dim_; ++i) {
    const double A = r2[i], B = r3[i], C = r4[i], D = r5[i];
    out[i] = ((A + B) + th * (2.0 * (-B + C + D) + th * (3.0 * (-C - 2.0 * D) + th * 4.0 * D))) / h;
  }
}

double Trajectory::dense_derivative(double t, std::size_t comp) const {
  std::vector<double> out(dim_);
  dense_derivative(t, std::span<double>(out));
  return out[comp];
}

namespace detail {

double refine_event_root(const std::function<double(double)>& g, double lo, double hi, double glo,
                         double ghi, double tol) {
  if (tol <= 0.0) throw std::invalid_argument("event root_tol must be positive");
  for (int iter = 0; iter < 200 && (hi - lo) > tol; ++iter) {
    double tm;
    const double width = hi - lo;
    if (ghi != glo) {
      tm = hi - ghi * width / (ghi - glo);
      if (!(tm > lo + 0.01 * width && tm < hi - 0.01 * width)) tm = lo + 0.5 * width;
    } else {
      tm = lo + 0.5 * width;
    }
    const double gm = g(tm);
    if (gm == 0.0) return tm;
    if ((gm > 0.0) == (glo > 0.0)) {
      lo = tm;
      glo = gm;
    } else {
      hi = tm;
      ghi = gm;
    }
  }
  return lo + 0.5 * (hi - lo);
}

}  // namespace detail
}  // namespace extprof
