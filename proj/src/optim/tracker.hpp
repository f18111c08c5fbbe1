#ifndef RSPIDER_OPTIM_TRACKER_HPP
#define RSPIDER_OPTIM_TRACKER_HPP

#include "rspider/optim.hpp"

namespace rspider::detail {

/// Turns the sequence of iterates of one run into a RunTrace and enforces
/// the IFO epoch budget. Trace-time evaluations are not IFO-charged.
class Tracker {
 public:
  Tracker(const FiniteSumObjective& objective, const Oracle& oracle, const TraceOptions& options);

  /// Records the starting point in checkpoint mode.
  void start(const Point& x0);
  /// Call after every update; returns true when the run has to stop.
  bool after_step(std::size_t k, const Point& x, double step_dist, std::size_t batch, std::size_t stage);
  bool exhausted() const;

  void add_meta(std::string key, std::string value);
  RunTrace finish();

 private:
  TraceRecord make_record(std::size_t k, const Point& x, double step_dist, std::size_t batch,
                          std::size_t stage) const;
  double budget_calls() const;

  const FiniteSumObjective& objective_;
  const Oracle& oracle_;
  TraceOptions options_;
  RunTrace trace_;
  std::size_t next_checkpoint_ = 1;
  std::size_t last_checkpoint_ = 0;
};

std::string format_double(double v);

}  // namespace rspider::detail

#endif  // RSPIDER_OPTIM_TRACKER_HPP
