#include "core/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "core/error.hpp"
#include "core/geo.hpp"
#include "core/rng.hpp"

namespace vtp {

std::vector<Voyage> segment_voyages(const std::vector<AisRecord>& records, std::int64_t gap_s,
                                    int utm_zone, PipelineCounters& counters) {
  if (gap_s <= 0) throw ConfigError("voyage gap threshold must be positive");
  // Ordered map keeps the final voyage list deterministic (vessel id order).
  std::map<std::uint64_t, std::vector<const AisRecord*>> by_vessel;
  for (const AisRecord& r : records) by_vessel[r.mmsi].push_back(&r);

  std::vector<Voyage> out;
  for (auto& [mmsi, rows] : by_vessel) {
    std::stable_sort(rows.begin(), rows.end(),
                     [](const AisRecord* a, const AisRecord* b) { return a->t < b->t; });
    Voyage cur;
    cur.vessel = std::to_string(mmsi);
    std::int64_t prev_t = 0;
    bool have_prev = false;
    auto flush = [&]() {
      if (!cur.t.empty()) {
        ++counters.segments_total;
        out.push_back(std::move(cur));
      }
      cur = Voyage{};
      cur.vessel = std::to_string(mmsi);
    };
    for (const AisRecord* r : rows) {
      if (have_prev && r->t == prev_t) {
        ++counters.duplicate_timestamps;
        continue;
      }
      double e = 0.0, n = 0.0;
      try {
        const UtmCoord u = project_utm(r->lat, r->lon, utm_zone);
        e = u.easting;
        n = u.northing;
      } catch (const DomainError&) {
        ++counters.records_out_of_zone;
        continue;
      }
      if (have_prev && r->t - prev_t > gap_s) flush();
      cur.t.push_back(r->t);
      cur.easting.push_back(e);
      cur.northing.push_back(n);
      prev_t = r->t;
      have_prev = true;
    }
    flush();
  }
  return out;
}

std::optional<Trajectory> resample_voyage(const Voyage& voyage, std::int64_t delta_s,
                                          int segment_ordinal) {
  if (delta_s <= 0) throw ConfigError("resampling interval must be positive");
  const std::size_t n = voyage.t.size();
  if (n < 2 || voyage.t.back() - voyage.t.front() < delta_s) return std::nullopt;

  Trajectory traj;
  traj.id = voyage.vessel + "#" + std::to_string(segment_ordinal);
  traj.t0 = voyage.t.front();
  traj.delta_s = delta_s;

  std::size_t seg = 0;  // current source interval [seg, seg+1]
  for (std::int64_t t = traj.t0; t <= voyage.t.back(); t += delta_s) {
    while (seg + 2 < n && voyage.t[seg + 1] < t) ++seg;
    const std::int64_t t_a = voyage.t[seg], t_b = voyage.t[seg + 1];
    // t_a <= t <= t_b by construction (grid starts at t.front(), stops at t.back()).
    if (t == t_a) {
      traj.easting.push_back(voyage.easting[seg]);
      traj.northing.push_back(voyage.northing[seg]);
    } else if (t == t_b) {
      // Exact hits reproduce the source sample bit-for-bit (idempotence on
      // already-uniform voyages).
      traj.easting.push_back(voyage.easting[seg + 1]);
      traj.northing.push_back(voyage.northing[seg + 1]);
    } else {
      const double w = static_cast<double>(t - t_a) / static_cast<double>(t_b - t_a);
      traj.easting.push_back(voyage.easting[seg] +
                             w * (voyage.easting[seg + 1] - voyage.easting[seg]));
      traj.northing.push_back(voyage.northing[seg] +
                              w * (voyage.northing[seg + 1] - voyage.northing[seg]));
    }
  }
  return traj;
}

std::vector<std::size_t> window_starts(std::size_t track_len, std::size_t l, std::size_t h) {
  if (l == 0 || h == 0) throw ConfigError("window lengths must be positive");
  std::vector<std::size_t> starts;
  if (track_len < l + h) return starts;
  const std::size_t count = track_len - (l + h) + 1;
  starts.reserve(count);
  for (std::size_t s = 0; s < count; ++s) starts.push_back(s);
  return starts;
}

std::optional<int> label_by_regions(const Trajectory& traj, const std::vector<Region>& regions,
                                    int utm_zone) {
  if (traj.size() == 0) throw ContractError("cannot label an empty trajectory");
  const LatLon end = invert_utm(traj.easting.back(), traj.northing.back(), utm_zone);
  std::optional<int> match;
  std::string clash;
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const Region& r = regions[i];
    if (end.lat >= r.min_lat && end.lat <= r.max_lat && end.lon >= r.min_lon &&
        end.lon <= r.max_lon) {
      if (match) {
        if (clash.empty()) clash = regions[*match].name;
        clash += ", " + r.name;
      } else {
        match = static_cast<int>(i);
      }
    }
  }
  if (!clash.empty())
    throw DataError("trajectory " + traj.id + " endpoint matches overlapping regions: " + clash);
  return match;
}

NormStats compute_norm_stats(const std::vector<Trajectory>& trajectories) {
  double se = 0.0, sn = 0.0;
  std::size_t count = 0;
  for (const Trajectory& tr : trajectories) {
    for (std::size_t i = 0; i < tr.size(); ++i) {
      se += tr.easting[i];
      sn += tr.northing[i];
      ++count;
    }
  }
  if (count == 0) throw DataError("cannot compute normalization statistics: no training points");
  NormStats s;
  s.mean_e = se / static_cast<double>(count);
  s.mean_n = sn / static_cast<double>(count);
  double ve = 0.0, vn = 0.0;
  for (const Trajectory& tr : trajectories) {
    for (std::size_t i = 0; i < tr.size(); ++i) {
      const double de = tr.easting[i] - s.mean_e, dn = tr.northing[i] - s.mean_n;
      ve += de * de;
      vn += dn * dn;
    }
  }
  s.std_e = std::sqrt(ve / static_cast<double>(count));
  s.std_n = std::sqrt(vn / static_cast<double>(count));
  if (s.std_e <= 0.0 || s.std_n <= 0.0)
    throw DataError("normalization failed: zero spread on an axis (all training points colinear "
                    "with a grid axis)");
  return s;
}

void normalize_point(const NormStats& s, double& e, double& n) {
  e = (e - s.mean_e) / s.std_e;
  n = (n - s.mean_n) / s.std_n;
}

void denormalize_point(const NormStats& s, double& e, double& n) {
  e = e * s.std_e + s.mean_e;
  n = n * s.std_n + s.mean_n;
}

void denormalize_covariance(const NormStats& s, double sigma[4]) {
  sigma[0] *= s.std_e * s.std_e;
  sigma[1] *= s.std_e * s.std_n;
  sigma[2] *= s.std_e * s.std_n;
  sigma[3] *= s.std_n * s.std_n;
}

SplitIndices split_trajectories(std::size_t count, double f_train, double f_val, double f_test,
                                std::uint64_t seed) {
  if (f_train < 0.0 || f_val < 0.0 || f_test < 0.0 ||
      std::fabs(f_train + f_val + f_test - 1.0) > 1e-9)
    throw ConfigError("split fractions must be non-negative and sum to 1");
  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  Rng rng(seed);
  // Fisher-Yates with the project RNG so splits reproduce across platforms.
  for (std::size_t i = count; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(order[i - 1], order[j]);
  }
  const std::size_t n_train =
      static_cast<std::size_t>(std::llround(static_cast<double>(count) * f_train));
  std::size_t n_val = static_cast<std::size_t>(std::llround(static_cast<double>(count) * f_val));
  if (n_train + n_val > count) n_val = count - n_train;

  SplitIndices out;
  out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                 order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  out.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  return out;
}

}  // namespace vtp
