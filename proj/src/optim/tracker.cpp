#include "tracker.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include "rspider/errors.hpp"

namespace rspider {

std::string RunTrace::meta_value(const std::string& key) const {
  for (const auto& [k, v] : meta) {
    if (k == key) return v;
  }
  return {};
}

namespace detail {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

Tracker::Tracker(const FiniteSumObjective& objective, const Oracle& oracle, const TraceOptions& options)
    : objective_(objective), oracle_(oracle), options_(options) {
  if (options_.mode == TraceOptions::Mode::Checkpoints) {
    if (!(options_.checkpoint_every > 0.0)) throw UsageError("checkpoint spacing must be positive");
    trace_.checkpoint_every = options_.checkpoint_every;
    last_checkpoint_ = std::numeric_limits<std::size_t>::max();
    if (options_.epoch_budget) {
      last_checkpoint_ =
          static_cast<std::size_t>(std::floor(*options_.epoch_budget / options_.checkpoint_every + 1e-9));
    }
  }
  if (options_.epoch_budget && *options_.epoch_budget < 0.0) throw UsageError("epoch budget must be >= 0");
}

double Tracker::budget_calls() const {
  return *options_.epoch_budget * static_cast<double>(objective_.size());
}

TraceRecord Tracker::make_record(std::size_t k, const Point& x, double step_dist, std::size_t batch,
                                 std::size_t stage) const {
  TraceRecord r;
  r.k = k;
  r.ifo = oracle_.calls();
  r.epoch = static_cast<double>(r.ifo) / static_cast<double>(objective_.size());
  r.f = objective_.value(x);
  r.grad_sq = options_.grad_sq ? objective_.full_gradient(x).squared_norm()
                               : std::numeric_limits<double>::quiet_NaN();
  r.step_dist = step_dist;
  r.batch = batch;
  r.stage = stage;
  return r;
}

void Tracker::start(const Point& x0) {
  if (options_.mode == TraceOptions::Mode::Checkpoints) trace_.records.push_back(make_record(0, x0, 0.0, 0, 0));
}

bool Tracker::exhausted() const {
  return options_.epoch_budget && static_cast<double>(oracle_.calls()) >= budget_calls();
}

bool Tracker::after_step(std::size_t k, const Point& x, double step_dist, std::size_t batch, std::size_t stage) {
  switch (options_.mode) {
    case TraceOptions::Mode::EveryIteration:
      trace_.records.push_back(make_record(k, x, step_dist, batch, stage));
      break;
    case TraceOptions::Mode::Checkpoints: {
      const auto n = static_cast<double>(objective_.size());
      const auto calls = static_cast<double>(oracle_.calls());
      while (next_checkpoint_ <= last_checkpoint_ &&
             calls >= static_cast<double>(next_checkpoint_) * options_.checkpoint_every * n) {
        trace_.records.push_back(make_record(k, x, step_dist, batch, stage));
        ++next_checkpoint_;
      }
      break;
    }
    case TraceOptions::Mode::Off:
      break;
  }
  return exhausted();
}

void Tracker::add_meta(std::string key, std::string value) { trace_.meta.emplace_back(std::move(key), std::move(value)); }

RunTrace Tracker::finish() {
  trace_.ifo_total = oracle_.calls();
  add_meta("ifo_convention", to_string(oracle_.convention()));
  return std::move(trace_);
}

}  // namespace detail
}  // namespace rspider
