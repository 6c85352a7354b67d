// Generates data/seal_like_track.csv: a synthetic seal-like GPS track whose
// sampling schedule reproduces the target summary statistics (3158 fixes,
// median / Q3 / mean time difference 64 / 122 / 100 min, 251 groups at a
// 66 / 132 min grid with 3129 interpolated locations) and whose locations on
// that grid follow the three-state seal CarHMM.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include "carhmm/error.hpp"
#include "carhmm/model.hpp"
#include "carhmm/preprocess.hpp"
#include "carhmm/rng.hpp"
#include "carhmm/simulate.hpp"
#include "carhmm/track_io.hpp"

using namespace carhmm;

namespace {

constexpr int kStep = 66;
constexpr std::size_t kGroups = 251;
constexpr double kKmPerDegree = 111.19492664455873;
constexpr double kTargetMeanKm = 2.10;
constexpr long kGapTotal = 125752;  // brings the mean time difference to 100 min
constexpr long kMinGap = 251;

// Sampling pattern of one block; `split` is the offset of the first interior fix.
struct Block {
  char kind;  // A: a + (66 - a), B: 66, F: a + (132 - a), E: a + 132 + (66 - a), D: 64 + 2
  int split = 0;
  int units() const { return kind == 'E' ? 3 : kind == 'F' ? 2 : 1; }
};

std::vector<Block> make_blocks(Rng& rng) {
  std::vector<Block> blocks;
  auto uniform_int = [&](int lo, int hi) {
    return lo + static_cast<int>(std::floor(rng.uniform() * (hi - lo + 1)));
  };
  // Every 132 min interval straddles two grid points, so the grid never has
  // three collinear, equally spaced locations.
  for (int i = 0; i < 28; ++i) blocks.push_back({'A', uniform_int(10, 56)});
  for (int i = 0; i < 539; ++i) blocks.push_back({'E', uniform_int(10, 56)});
  for (int i = 0; i < 346; ++i) blocks.push_back({'B'});
  blocks.push_back({'F', 10});
  for (int i = 1; i < 443; ++i) blocks.push_back({'F', uniform_int(11, 63)});
  blocks.push_back({'D', 64});
  for (std::size_t i = blocks.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(std::floor(rng.uniform() * static_cast<double>(i)));
    std::swap(blocks[i - 1], blocks[j]);
  }
  return blocks;
}

std::vector<std::size_t> group_sizes(std::size_t n_blocks, Rng& rng) {
  std::vector<std::size_t> sizes(kGroups, 2);
  for (std::size_t extra = n_blocks - 2 * kGroups; extra > 0; --extra) {
    sizes[static_cast<std::size_t>(std::floor(rng.uniform() * kGroups))] += 1;
  }
  return sizes;
}

std::vector<long> gaps(Rng& rng) {
  std::vector<double> w(kGroups - 1);
  for (auto& x : w) x = -std::log(rng.uniform());
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  const long spare = kGapTotal - kMinGap * static_cast<long>(w.size());
  std::vector<long> out;
  long used = 0;
  for (double x : w) {
    out.push_back(kMinGap + static_cast<long>(std::floor(x / total * spare)));
    used += out.back() - kMinGap;
  }
  for (long r = spare - used, i = 0; r > 0; --r, ++i) out[static_cast<std::size_t>(i)] += 1;
  return out;
}

geo::LatLon lerp(const geo::LatLon& a, const geo::LatLon& b, double w) {
  return {a.lat + w * (b.lat - a.lat), a.lon + w * (b.lon - a.lon)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string out_path = argc > 1 ? argv[1] : "data/seal_like_track.csv";
  try {
    Rng rng(20160704);
    const auto blocks = make_blocks(rng);
    const auto sizes = group_sizes(blocks.size(), rng);
    const auto gap = gaps(rng);
    const CarHmmModel model = presets::seal_three_state();

    // Latent knot paths, planar in model units.
    std::vector<std::vector<PlanarPoint>> paths;
    double step_total = 0.0;
    std::size_t step_count = 0;
    for (std::size_t g = 0, b = 0; g < kGroups; ++g) {
      int units = 0;
      for (std::size_t i = 0; i < sizes[g]; ++i) units += blocks[b + i].units();
      b += sizes[g];
      const auto sim = simulate_series(model, static_cast<std::size_t>(units - 1),
                                       rng.next_u64());
      paths.push_back(sim.planar);
      step_total += sim.group.d0;
      for (const auto& o : sim.group.obs) step_total += o.d;
      step_count += sim.group.obs.size() + 1;
    }
    const double km = kTargetMeanKm / (step_total / static_cast<double>(step_count));

    RawTrack track;
    long t = 0;
    geo::LatLon origin{44.0, -60.0};
    for (std::size_t g = 0, b = 0; g < kGroups; ++g) {
      const double turn = rng.uniform(-geo::kPi, geo::kPi);
      const double ct = std::cos(turn), st = std::sin(turn);
      std::vector<geo::LatLon> knots{origin};
      for (std::size_t i = 1; i < paths[g].size(); ++i) {
        const double dx0 = km * (paths[g][i].x - paths[g][i - 1].x);
        const double dy0 = km * (paths[g][i].y - paths[g][i - 1].y);
        const double dx = ct * dx0 - st * dy0;
        const double dy = st * dx0 + ct * dy0;
        const auto& p = knots.back();
        const double lat = p.lat + dy / kKmPerDegree;
        const double mid = 0.5 * (p.lat + lat) * geo::kPi / 180.0;
        knots.push_back({lat, p.lon + dx / (kKmPerDegree * std::cos(mid))});
      }

      std::size_t k = 0;
      track.records.push_back({static_cast<double>(t), knots[0].lat, knots[0].lon});
      for (std::size_t i = 0; i < sizes[g]; ++i) {
        const Block& blk = blocks[b + i];
        const double t0 = static_cast<double>(t);
        auto emit = [&](double time, const geo::LatLon& p) {
          track.records.push_back({time, p.lat, p.lon});
        };
        switch (blk.kind) {
          case 'A':
          case 'D':
            emit(t0 + blk.split, lerp(knots[k], knots[k + 1], blk.split / double(kStep)));
            emit(t0 + kStep, knots[k + 1]);
            break;
          case 'B':
            emit(t0 + kStep, knots[k + 1]);
            break;
          case 'F':
            // Chosen so that interpolating between this fix and the block end
            // reproduces the middle knot exactly.
            emit(t0 + blk.split,
                 lerp(knots[k + 2], knots[k + 1], (2.0 * kStep - blk.split) / kStep));
            emit(t0 + 2 * kStep, knots[k + 2]);
            break;
          case 'E':
            // Both interior fixes lie on the line through the two middle knots.
            emit(t0 + blk.split, lerp(knots[k + 1], knots[k + 2],
                                      (blk.split - kStep) / double(kStep)));
            emit(t0 + blk.split + 2 * kStep,
                 lerp(knots[k + 1], knots[k + 2], (blk.split + kStep) / double(kStep)));
            emit(t0 + 3 * kStep, knots[k + 3]);
            break;
        }
        k += static_cast<std::size_t>(blk.units());
        t += blk.units() * kStep;
      }
      b += sizes[g];
      if (g + 1 < kGroups) {
        t += gap[g];
        const auto& last = knots.back();
        origin = {last.lat + rng.uniform(-0.05, 0.05), last.lon + rng.uniform(-0.05, 0.05)};
      }
    }

    std::ofstream out(out_path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + out_path);
    write_track_csv(out, track);
    out.close();

    // Report the realized statistics from the written file.
    const RawTrack back = parse_track_csv(out_path);
    std::vector<double> dt;
    for (std::size_t i = 1; i < back.records.size(); ++i) {
      dt.push_back(back.records[i].time - back.records[i - 1].time);
    }
    const double mean_dt = std::accumulate(dt.begin(), dt.end(), 0.0) / double(dt.size());
    const auto metrics = grid_metrics(back, {66.0, 132.0});
    const auto series = preprocess_track(back, {66.0, 132.0});
    std::printf("fixes %zu  dt median %.3f q3 %.3f mean %.3f\n", back.records.size(),
                median(dt), quantile(dt, 0.75), mean_dt);
    std::printf("grid 66/132: groups %zu interp %zu n_prop %.4f n_adj %.4f mean step %.4f km\n",
                metrics.n_groups, metrics.n_interp_locations, metrics.n_prop, metrics.n_adj,
                series.mean_step_km);
  } catch (const std::exception& e) {
    std::cerr << "make_fixture: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
