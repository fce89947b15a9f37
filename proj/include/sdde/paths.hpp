#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <charconv>
#include <deque>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sdde {

/// How values between grid points are defined. `step` holds the last grid value
/// (noise realizations); `linear` ramps between grid points but still steps
/// across recorded jump events (solver trajectories).
enum class Interpolation { step, linear };

/// A genuine discontinuity at grid position `index`: the path approaches
/// `left_value` from the left and sits at the grid value from `index` onwards.
/// Grid-resolution moves that merely reflect sampling (e.g. Brownian increments
/// in a step path) are not jump events.
struct JumpEvent {
  std::size_t index = 0;
  double left_value = 0.0;
};

/// Right-continuous piecewise path on a strictly increasing time grid with an
/// explicit list of jump events. This is the realization type for trajectories,
/// noise paths, and forcing paths alike.
class CadlagPath {
 public:
  CadlagPath() = default;

  CadlagPath(std::vector<double> times, std::vector<double> values,
             std::vector<JumpEvent> jumps, Interpolation interp)
      : times_(std::move(times)),
        values_(std::move(values)),
        jumps_(std::move(jumps)),
        interp_(interp) {
    validate();
  }

  [[nodiscard]] const std::vector<double>& times() const noexcept { return times_; }
  [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }
  [[nodiscard]] const std::vector<JumpEvent>& jumps() const noexcept { return jumps_; }
  [[nodiscard]] Interpolation interpolation() const noexcept { return interp_; }
  [[nodiscard]] std::size_t size() const noexcept { return times_.size(); }
  [[nodiscard]] double front_time() const { return times_.front(); }
  [[nodiscard]] double back_time() const { return times_.back(); }

  /// Right-continuous value at time t. Throws std::out_of_range outside the
  /// grid span (a relative 1e-9 slack absorbs grid arithmetic rounding).
  [[nodiscard]] double value_at(double t) const {
    const std::size_t i = locate(t);
    if (interp_ == Interpolation::step || i + 1 == times_.size()) return values_[i];
    const double t0 = times_[i], t1 = times_[i + 1];
    if (t <= t0) return values_[i];
    const double target = pre_value(i + 1);
    const double w = (t - t0) / (t1 - t0);
    return values_[i] + w * (target - values_[i]);
  }

  /// Left limit at time t. Differs from value_at only at grid times carrying a
  /// jump event (and, for step paths, at every grid time where the value moves).
  [[nodiscard]] double left_limit_at(double t) const {
    const std::size_t i = locate(t);
    if (same_time(times_[i], t)) return left_limit_at_index(i);
    if (interp_ == Interpolation::step) return values_[i];
    return value_at(t);
  }

  [[nodiscard]] double left_limit_at_index(std::size_t j) const {
    if (j >= times_.size()) throw std::out_of_range("CadlagPath: index out of range");
    if (j == 0) return values_[0];
    if (const JumpEvent* e = jump_at(j)) return e->left_value;
    return interp_ == Interpolation::step ? values_[j - 1] : values_[j];
  }

  [[nodiscard]] const JumpEvent* jump_at(std::size_t index) const noexcept {
    auto it = std::lower_bound(jumps_.begin(), jumps_.end(), index,
                               [](const JumpEvent& e, std::size_t k) { return e.index < k; });
    return (it != jumps_.end() && it->index == index) ? &*it : nullptr;
  }

  /// Largest grid index i with times[i] <= t (with boundary slack).
  [[nodiscard]] std::size_t locate(double t) const {
    if (times_.empty()) throw std::out_of_range("CadlagPath: empty path");
    const double slack = 1e-9 * std::max({1.0, std::fabs(times_.front()), std::fabs(times_.back())});
    if (t < times_.front() - slack || t > times_.back() + slack)
      throw std::out_of_range("CadlagPath: query time outside path span");
    if (t <= times_.front()) return 0;
    if (t >= times_.back()) return times_.size() - 1;
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    return static_cast<std::size_t>(it - times_.begin()) - 1;
  }

  static bool same_time(double a, double b) noexcept {
    return std::fabs(a - b) <= 1e-12 * std::max({1.0, std::fabs(a), std::fabs(b)});
  }

 private:
  // Value the path ramps toward on [times[j-1], times[j]): the pre-jump value
  // if a jump lands at j, otherwise the grid value itself.
  [[nodiscard]] double pre_value(std::size_t j) const {
    if (const JumpEvent* e = jump_at(j)) return e->left_value;
    return values_[j];
  }

  void validate() const {
    if (times_.empty()) throw std::invalid_argument("CadlagPath: at least one grid point required");
    if (times_.size() != values_.size())
      throw std::invalid_argument("CadlagPath: times/values size mismatch");
    for (double t : times_)
      if (!std::isfinite(t)) throw std::invalid_argument("CadlagPath: non-finite grid time");
    for (double v : values_)
      if (!std::isfinite(v)) throw std::invalid_argument("CadlagPath: non-finite value");
    for (std::size_t i = 1; i < times_.size(); ++i)
      if (!(times_[i] > times_[i - 1]))
        throw std::invalid_argument("CadlagPath: grid times must be strictly increasing");
    std::size_t prev = 0;
    bool first = true;
    for (const JumpEvent& e : jumps_) {
      if (e.index == 0 || e.index >= times_.size())
        throw std::invalid_argument("CadlagPath: jump index out of range");
      if (!first && e.index <= prev)
        throw std::invalid_argument("CadlagPath: jump events must be sorted by index, unique");
      if (!std::isfinite(e.left_value))
        throw std::invalid_argument("CadlagPath: non-finite jump left value");
      prev = e.index;
      first = false;
    }
  }

  std::vector<double> times_;
  std::vector<double> values_;
  std::vector<JumpEvent> jumps_;
  Interpolation interp_ = Interpolation::step;
};

/// A path restricted to a delay window, re-anchored to [-tau, 0]. This is the
/// delay-system state: segments are what drift/noise functionals consume and
/// what segment measures collect.
struct Segment {
  double tau = 0.0;
  CadlagPath path;

  [[nodiscard]] double value(double theta) const { return path.value_at(theta); }
  [[nodiscard]] double front() const { return path.values().front(); }
  [[nodiscard]] double back() const { return path.values().back(); }
};

namespace detail {

struct Atom {
  double t;
  double v;
  bool is_left;  // left-limit atoms sort before the grid value at the same time
};

inline std::vector<Atom> make_atoms(const CadlagPath& p) {
  std::vector<Atom> a;
  a.reserve(2 * p.size());
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (j > 0) a.push_back({p.times()[j], p.left_limit_at_index(j), true});
    a.push_back({p.times()[j], p.values()[j], false});
  }
  return a;
}

// Sliding-window max/min over atoms with monotone deques; `edge` is the
// interpolated path value at the window border that falls between grid points.
class WindowExtrema {
 public:
  void push(std::size_t idx, double v) {
    while (!maxq_.empty() && maxq_.back().second <= v) maxq_.pop_back();
    maxq_.emplace_back(idx, v);
    while (!minq_.empty() && minq_.back().second >= v) minq_.pop_back();
    minq_.emplace_back(idx, v);
  }
  void drop_before(std::size_t lo) {
    while (!maxq_.empty() && maxq_.front().first < lo) maxq_.pop_front();
    while (!minq_.empty() && minq_.front().first < lo) minq_.pop_front();
  }
  [[nodiscard]] bool empty() const noexcept { return maxq_.empty(); }
  [[nodiscard]] double max() const { return maxq_.front().second; }
  [[nodiscard]] double min() const { return minq_.front().second; }

 private:
  std::deque<std::pair<std::size_t, double>> maxq_, minq_;
};

// Range max/min over a static array in O(1) after O(n log n) build.
class SparseTable {
 public:
  explicit SparseTable(const std::vector<double>& v) {
    const std::size_t n = v.size();
    levels_ = 1;
    while ((std::size_t{1} << levels_) <= n) ++levels_;
    mx_.assign(levels_, v);
    mn_.assign(levels_, v);
    for (std::size_t k = 1; k < levels_; ++k) {
      const std::size_t half = std::size_t{1} << (k - 1);
      for (std::size_t i = 0; i + (std::size_t{1} << k) <= n; ++i) {
        mx_[k][i] = std::max(mx_[k - 1][i], mx_[k - 1][i + half]);
        mn_[k][i] = std::min(mn_[k - 1][i], mn_[k - 1][i + half]);
      }
    }
  }

  // Closed index range [lo, hi]; caller guarantees lo <= hi.
  [[nodiscard]] double range_max(std::size_t lo, std::size_t hi) const {
    const std::size_t k = level(hi - lo + 1);
    return std::max(mx_[k][lo], mx_[k][hi + 1 - (std::size_t{1} << k)]);
  }
  [[nodiscard]] double range_min(std::size_t lo, std::size_t hi) const {
    const std::size_t k = level(hi - lo + 1);
    return std::min(mn_[k][lo], mn_[k][hi + 1 - (std::size_t{1} << k)]);
  }

 private:
  static std::size_t level(std::size_t len) noexcept {
    std::size_t k = 0;
    while ((std::size_t{2} << k) <= len) ++k;
    return k;
  }
  std::size_t levels_ = 0;
  std::vector<std::vector<double>> mx_, mn_;
};

}  // namespace detail

/// Restrict `path` to [t - tau, t] and re-anchor times to [-tau, 0]. Grid points
/// strictly inside the window are kept as-is; the window ends are synthesized by
/// the path's own interpolation rule when they fall between grid points. A jump
/// event exactly at the window start belongs to the past and is dropped.
inline Segment segment_at(const CadlagPath& path, double t, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("segment_at: tau must be positive");
  const double lo = t - tau;
  const double slack = 1e-9 * std::max(1.0, std::fabs(path.front_time()));
  if (lo < path.front_time() - slack || t > path.back_time() + slack)
    throw std::out_of_range("segment_at: window [t - tau, t] not covered by path");

  const auto& times = path.times();
  std::vector<double> st, sv;
  std::vector<JumpEvent> sj;

  const bool lo_on_grid = [&] {
    const std::size_t i = path.locate(lo);
    return CadlagPath::same_time(times[i], lo);
  }();
  st.push_back(-tau);
  sv.push_back(path.value_at(lo));

  auto first_inside = std::upper_bound(times.begin(), times.end(), lo);
  // Skip a grid point that *is* the window start (already emitted above).
  while (first_inside != times.end() && CadlagPath::same_time(*first_inside, lo)) ++first_inside;
  (void)lo_on_grid;

  bool t_on_grid = false;
  for (auto it = first_inside; it != times.end() && *it < t; ++it) {
    if (CadlagPath::same_time(*it, t)) break;
    const std::size_t j = static_cast<std::size_t>(it - times.begin());
    st.push_back(*it - t);
    sv.push_back(path.values()[j]);
    if (const JumpEvent* e = path.jump_at(j)) sj.push_back({st.size() - 1, e->left_value});
  }
  {
    const std::size_t i = path.locate(t);
    t_on_grid = CadlagPath::same_time(times[i], t);
    st.push_back(0.0);
    sv.push_back(path.value_at(t));
    if (t_on_grid) {
      if (const JumpEvent* e = path.jump_at(i)) sj.push_back({st.size() - 1, e->left_value});
    }
  }
  return Segment{tau, CadlagPath(std::move(st), std::move(sv), std::move(sj), path.interpolation())};
}

/// Supremum norm over the window, evaluated on the discrete representation:
/// every grid value plus every recorded pre-jump value.
inline double sup_norm(const Segment& seg) {
  double m = 0.0;
  for (double v : seg.path.values()) m = std::max(m, std::fabs(v));
  for (const JumpEvent& e : seg.path.jumps()) m = std::max(m, std::fabs(e.left_value));
  return m;
}

/// Largest recorded discontinuity gap in the window; 0 for continuous segments.
inline double max_jump(const Segment& seg) {
  double m = 0.0;
  for (const JumpEvent& e : seg.path.jumps())
    m = std::max(m, std::fabs(seg.path.values()[e.index] - e.left_value));
  return m;
}

/// Classical oscillation modulus: the largest |phi(s) - phi(t)| over pairs at
/// distance <= delta, computed exactly for the represented step/linear path.
/// Left limits count (they are approached from inside any window that ends at
/// or passes the jump time), so a single jump of height h yields h for every
/// delta > 0.
inline double modulus_omega(const Segment& seg, double delta) {
  const double tau = seg.tau;
  if (!(delta > 0.0) || delta > tau * (1.0 + 1e-12))
    throw std::invalid_argument("modulus_omega: delta must lie in (0, tau]");
  delta = std::min(delta, tau);

  const auto atoms = detail::make_atoms(seg.path);
  const double t_front = seg.path.front_time();
  const double eps_t = 1e-12 * std::max(1.0, tau);
  double best = 0.0;

  // An atom at the left window edge counts only through its grid value (the
  // left limit there is approached from outside the window); at the right edge
  // both count.
  const auto outside_left = [&](const detail::Atom& a, double w) {
    return a.t < w - eps_t || (std::fabs(a.t - w) <= eps_t && a.is_left);
  };

  // Any sliding window's max/min changes monotonically between atom crossings,
  // so windows pinned with an edge at an atom time dominate. Two sweeps: right
  // edge on atoms, then left edge on atoms; the off-grid edge contributes its
  // interpolated value.
  {
    detail::WindowExtrema ext;
    std::size_t lo = 0;
    for (std::size_t a = 0; a < atoms.size(); ++a) {
      ext.push(a, atoms[a].v);
      if (atoms[a].is_left) continue;
      const double e = atoms[a].t;
      const double w = e - delta;
      if (w < t_front - eps_t) continue;
      while (lo < atoms.size() && outside_left(atoms[lo], w)) ++lo;
      ext.drop_before(lo);
      if (ext.empty()) continue;
      double hi_v = ext.max(), lo_v = ext.min();
      if (w > t_front + eps_t) {
        const double edge = seg.path.value_at(w);
        hi_v = std::max(hi_v, edge);
        lo_v = std::min(lo_v, edge);
      }
      best = std::max(best, hi_v - lo_v);
    }
  }
  {
    detail::WindowExtrema ext;
    std::size_t hi = 0, lo = 0;
    for (std::size_t a = 0; a < atoms.size(); ++a) {
      if (atoms[a].is_left) continue;
      const double w = atoms[a].t;
      const double e = w + delta;
      if (e > eps_t) break;  // window would leave [-tau, 0]
      while (hi < atoms.size() && atoms[hi].t <= e + eps_t) {
        ext.push(hi, atoms[hi].v);
        ++hi;
      }
      while (lo < atoms.size() && outside_left(atoms[lo], w)) ++lo;
      ext.drop_before(lo);
      if (ext.empty()) continue;
      double hi_v = ext.max(), lo_v = ext.min();
      if (e < -eps_t) {
        const double edge = seg.path.value_at(e);
        hi_v = std::max(hi_v, edge);
        lo_v = std::min(lo_v, edge);
      }
      best = std::max(best, hi_v - lo_v);
    }
  }
  {
    // One-sided limit windows [t_a - 0, t_a + delta - 0): sliding the window
    // up against a discontinuity keeps the pre-jump value while the far edge
    // stops short of t_a + delta. With linear interpolation the far-edge limit
    // value need not coincide with any atom, so these windows can dominate
    // both pinned sweeps. (When t_a + delta leaves the domain the window is a
    // subset of the last sweep-A window and adds nothing.)
    for (std::size_t a = 0; a < atoms.size(); ++a) {
      if (!atoms[a].is_left) continue;
      const double t_a = atoms[a].t;
      const double e = t_a + delta;
      if (e > eps_t) continue;
      double hi_v = atoms[a].v, lo_v = atoms[a].v;
      for (std::size_t i = a + 1; i < atoms.size() && atoms[i].t < e - eps_t; ++i) {
        if (std::fabs(atoms[i].t - t_a) <= eps_t) continue;
        hi_v = std::max(hi_v, atoms[i].v);
        lo_v = std::min(lo_v, atoms[i].v);
      }
      const double edge = seg.path.left_limit_at(std::min(e, 0.0));
      hi_v = std::max(hi_v, edge);
      lo_v = std::min(lo_v, edge);
      best = std::max(best, hi_v - lo_v);
    }
  }
  return best;
}

/// Partition-based càdlàg modulus: the smallest achievable worst-cell
/// oscillation over partitions of [-tau, 0] with cell widths > delta, cells
/// half-open [t_{i-1}, t_i). Partition points range over the grid (which
/// contains all jump times), optimized by dynamic programming. A lone jump is
/// neutralized by placing a partition point on it, and the value at theta = 0
/// never enters (the last cell sees only the left limit there).
inline double modulus_varpi(const Segment& seg, double delta) {
  const double tau = seg.tau;
  if (!(delta > 0.0) || !(delta < tau))
    throw std::invalid_argument("modulus_varpi: delta must lie in (0, tau)");

  const auto& times = seg.path.times();
  const std::size_t m = times.size() - 1;  // cells end at indices 1..m
  if (m == 0) return 0.0;

  std::vector<double> rv = seg.path.values();
  std::vector<double> lv(times.size(), 0.0);
  double max_gap = 0.0;
  for (std::size_t j = 1; j <= m; ++j) {
    lv[j] = seg.path.left_limit_at_index(j);
    max_gap = std::max(max_gap, times[j] - times[j - 1]);
  }
  const detail::SparseTable right_tab(rv), left_tab(lv);

  // Oscillation of the half-open cell [times[i], times[j]): grid values in
  // [i, j-1] plus left limits in (i, j].
  const auto cell_osc = [&](std::size_t i, std::size_t j) {
    const double hi = std::max(right_tab.range_max(i, j - 1), left_tab.range_max(i + 1, j));
    const double lo = std::min(right_tab.range_min(i, j - 1), left_tab.range_min(i + 1, j));
    return hi - lo;
  };

  // Any cell wider than 2*delta + 2*max_gap can be split at a grid point near
  // its middle without shrinking either half below delta, so capping candidate
  // widths loses nothing and keeps the scan window short.
  const double cap = std::min(tau * (1.0 + 1e-12), 2.0 * delta + 2.0 * max_gap);
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> dp(times.size(), kInf);
  dp[0] = 0.0;
  std::size_t lo_ptr = 0;
  for (std::size_t j = 1; j <= m; ++j) {
    while (lo_ptr < j && times[j] - times[lo_ptr] > cap) ++lo_ptr;
    for (std::size_t i = lo_ptr; i < j; ++i) {
      if (!(times[j] - times[i] > delta)) break;  // widths only shrink as i grows
      if (dp[i] == kInf) continue;
      dp[j] = std::min(dp[j], std::max(dp[i], cell_osc(i, j)));
    }
  }
  if (dp[m] == kInf)
    throw std::invalid_argument("modulus_varpi: no admissible partition at this delta");
  return dp[m];
}

namespace detail {

inline void append_double(std::string& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

inline double parse_double(std::string_view s, const char* what) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::invalid_argument(std::string("CSV: malformed number in column ") + what);
  return v;
}

}  // namespace detail

/// Serialize with shortest round-trip decimal formatting. Column three is blank
/// except at jump events, where it carries the pre-jump value.
inline std::string write_csv(const CadlagPath& path) {
  std::string out = "time,right_value,left_value\n";
  for (std::size_t j = 0; j < path.size(); ++j) {
    detail::append_double(out, path.times()[j]);
    out.push_back(',');
    detail::append_double(out, path.values()[j]);
    out.push_back(',');
    if (const JumpEvent* e = path.jump_at(j)) detail::append_double(out, e->left_value);
    out.push_back('\n');
  }
  return out;
}

inline CadlagPath read_csv(std::string_view text, Interpolation interp) {
  std::vector<double> times, values;
  std::vector<JumpEvent> jumps;
  std::size_t pos = 0, row = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.empty()) continue;
    if (row++ == 0 && line.rfind("time,", 0) == 0) continue;
    const std::size_t c1 = line.find(',');
    const std::size_t c2 = line.find(',', c1 + 1);
    if (c1 == std::string_view::npos || c2 == std::string_view::npos)
      throw std::invalid_argument("CSV: expected three columns");
    times.push_back(detail::parse_double(line.substr(0, c1), "time"));
    values.push_back(detail::parse_double(line.substr(c1 + 1, c2 - c1 - 1), "right_value"));
    const std::string_view left = line.substr(c2 + 1);
    if (!left.empty())
      jumps.push_back({times.size() - 1, detail::parse_double(left, "left_value")});
  }
  return CadlagPath(std::move(times), std::move(values), std::move(jumps), interp);
}

}  // namespace sdde
