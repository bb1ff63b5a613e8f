#pragma once
// Core state types shared across the library: sampled trajectories, counted
// right-hand-side callables, and the failure taxonomy that separates
// validation errors (std::invalid_argument) from numerical breakdown.

#include <Eigen/Dense>

#include <atomic>
#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace eqfree {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Sampled solution of an initial-value problem: times[k] pairs with
/// states[k].  Times are strictly monotone — increasing or decreasing, so a
/// trajectory can equally describe a backward-in-time run.
template <typename Scalar>
struct Trajectory {
  std::vector<Scalar> times;
  std::vector<VectorX<Scalar>> states;

  [[nodiscard]] Eigen::Index size() const {
    return static_cast<Eigen::Index>(times.size());
  }
  [[nodiscard]] Eigen::Index dim() const {
    return states.empty() ? 0 : states.front().size();
  }
  void push_back(Scalar t, VectorX<Scalar> u) {
    times.push_back(t);
    states.push_back(std::move(u));
  }
  [[nodiscard]] const VectorX<Scalar>& back_state() const { return states.back(); }
  [[nodiscard]] Scalar back_time() const { return times.back(); }

  /// All samples as one size()-by-dim() matrix, one sample per row.
  [[nodiscard]] MatrixX<Scalar> states_matrix() const {
    MatrixX<Scalar> m(size(), dim());
    for (Eigen::Index k = 0; k < size(); ++k) m.row(k) = states[k].transpose();
    return m;
  }
};

/// Counted right-hand-side callable f(t, u) -> du/dt.  Copies share the
/// evaluation counter (cost accounting survives pass-by-value) and the
/// counter is atomic, so each call adds exactly one even under concurrency.
template <typename Scalar>
class Rhs {
 public:
  using Fn = std::function<VectorX<Scalar>(Scalar, const VectorX<Scalar>&)>;

  Rhs() = default;
  template <typename F,
            typename = std::enable_if_t<!std::is_same_v<std::decay_t<F>, Rhs> &&
                                        std::is_convertible_v<F, Fn>>>
  Rhs(F fn)  // NOLINT: implicit wrap of plain callables is the point
      : fn_(std::move(fn)),
        count_(std::make_shared<std::atomic<long long>>(0)) {}

  VectorX<Scalar> operator()(Scalar t, const VectorX<Scalar>& u) const {
    count_->fetch_add(1, std::memory_order_relaxed);
    return fn_(t, u);
  }

  [[nodiscard]] long long evaluations() const {
    return count_->load(std::memory_order_relaxed);
  }
  void reset_evaluations() const { count_->store(0, std::memory_order_relaxed); }
  [[nodiscard]] explicit operator bool() const { return static_cast<bool>(fn_); }

 private:
  Fn fn_;
  std::shared_ptr<std::atomic<long long>> count_;
};

/// Numerical breakdown (divergence, non-finite states, step underflow).
/// Drivers map this to exit code 3; precondition violations throw
/// std::invalid_argument and map to exit code 2.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what,
                          double time_reached = std::nan(""))
      : std::runtime_error(what), time_reached_(time_reached) {}
  [[nodiscard]] double time_reached() const { return time_reached_; }

 private:
  double time_reached_;
};

/// Integration abort that keeps the partial trajectory computed so far.
template <typename Scalar>
class IntegrationError : public NumericalError {
 public:
  IntegrationError(const std::string& what, double time_reached,
                   Trajectory<Scalar> partial_trajectory,
                   long long step_index = -1)
      : NumericalError(what, time_reached),
        partial(std::move(partial_trajectory)),
        step(step_index) {}

  Trajectory<Scalar> partial;  ///< accepted samples before the failure
  long long step;              ///< offending step index, -1 if not step-local
};

}  // namespace eqfree
