#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "qpusim/errors.hpp"

namespace qpusim {

// One logic transition of a named digital signal.
struct Edge {
  double time_s;
  std::string signal;
  int level;  // 0 or 1

  friend bool operator==(const Edge&, const Edge&) = default;
};

// Discrete edge-event timeline. Edges are kept sorted by time (stable for
// simultaneous edges); per signal, levels alternate and start from 0.
struct SignalTimeline {
  std::vector<Edge> edges;
  double resolution_s = 0.0;

  void sort_stable() {
    std::stable_sort(edges.begin(), edges.end(),
                     [](const Edge& a, const Edge& b) { return a.time_s < b.time_s; });
  }

  std::vector<std::string> signals() const {
    std::vector<std::string> out;
    for (const auto& e : edges) {
      if (std::find(out.begin(), out.end(), e.signal) == out.end()) out.push_back(e.signal);
    }
    return out;
  }

  std::vector<Edge> edges_of(const std::string& signal) const {
    std::vector<Edge> out;
    for (const auto& e : edges) {
      if (e.signal == signal) out.push_back(e);
    }
    return out;
  }

  // High intervals [rise, fall) of one signal; an unterminated final high
  // interval is closed at `end_s`.
  std::vector<std::pair<double, double>> high_intervals(const std::string& signal,
                                                        double end_s) const {
    std::vector<std::pair<double, double>> out;
    double rise = 0.0;
    bool high = false;
    for (const auto& e : edges_of(signal)) {
      if (e.level == 1 && !high) {
        rise = e.time_s;
        high = true;
      } else if (e.level == 0 && high) {
        out.emplace_back(rise, e.time_s);
        high = false;
      }
    }
    if (high) out.emplace_back(rise, end_s);
    return out;
  }

  // VCD-style CSV: time_s,signal,level
  void write_csv(std::ostream& os) const {
    os << "time_s,signal,level\n";
    for (const auto& e : edges) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.12g", e.time_s);
      os << buf << ',' << e.signal << ',' << e.level << '\n';
    }
  }
};

// Pointwise boolean combination of two single-signal timelines (levels start
// at 0). Emits an edge whenever op(a,b) changes.
template <typename Op>
SignalTimeline combine_timelines(const SignalTimeline& ta, const SignalTimeline& tb,
                                 const std::string& a, const std::string& b,
                                 const std::string& out_name, Op op) {
  auto ea = ta.edges_of(a);
  auto eb = tb.edges_of(b);
  SignalTimeline out;
  out.resolution_s = ta.resolution_s;
  size_t i = 0, j = 0;
  int la = 0, lb = 0, lout = 0;
  while (i < ea.size() || j < eb.size()) {
    double t;
    if (j >= eb.size() || (i < ea.size() && ea[i].time_s <= eb[j].time_s)) {
      t = ea[i].time_s;
    } else {
      t = eb[j].time_s;
    }
    while (i < ea.size() && ea[i].time_s == t) la = ea[i++].level;
    while (j < eb.size() && eb[j].time_s == t) lb = eb[j++].level;
    int v = op(la, lb) ? 1 : 0;
    if (v != lout) {
      out.edges.push_back({t, out_name, v});
      lout = v;
    }
  }
  return out;
}

// Piecewise-constant analog trace: value holds from each point's time until
// the next point. Value before the first point is 0.
struct TracePoint {
  double time_s;
  double value_v;
};

struct StepTrace {
  std::vector<TracePoint> steps;

  double value_at(double t) const {
    double v = 0.0;
    for (const auto& p : steps) {
      if (p.time_s <= t) v = p.value_v;
      else break;
    }
    return v;
  }

  void add_step(double time_s, double value_v) {
    if (!steps.empty() && time_s < steps.back().time_s)
      throw ValidationError("trace steps must be time-ordered");
    steps.push_back({time_s, value_v});
  }
};

}  // namespace qpusim
