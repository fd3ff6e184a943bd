#include "blockbgs/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "blockbgs/error.hpp"

namespace blockbgs {

MaskScore make_mask_score(std::size_t tp, std::size_t fp, std::size_t fn) {
  MaskScore s{tp, fp, fn};
  s.precision = tp + fp == 0 ? 0.0 : double(tp) / double(tp + fp);
  s.recall = tp + fn == 0 ? 0.0 : double(tp) / double(tp + fn);
  s.f_measure = s.precision + s.recall == 0.0
                    ? 0.0
                    : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

MaskScore score_mask(const MaskGray& predicted, const MaskGray& truth) {
  if (predicted.width != truth.width || predicted.height != truth.height) {
    throw ValidationError("mask dimensions differ: " + std::to_string(predicted.width) + "x" +
                          std::to_string(predicted.height) + " vs " +
                          std::to_string(truth.width) + "x" + std::to_string(truth.height));
  }
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t p = 0; p < truth.data.size(); ++p) {
    const bool pred = predicted.data[p] != MaskGray::kBackground;
    const bool gt = truth.data[p] != MaskGray::kBackground;
    tp += pred && gt;
    fp += pred && !gt;
    fn += !pred && gt;
  }
  return make_mask_score(tp, fp, fn);
}

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

std::vector<std::ptrdiff_t> solve_assignment(std::span<const double> cost, std::size_t rows,
                                             std::size_t cols) {
  if (cost.size() != rows * cols) throw ParameterError("cost matrix size mismatch");
  std::vector<std::ptrdiff_t> result(rows, -1);
  if (rows == 0 || cols == 0) return result;

  // Shortest augmenting path formulation of the Hungarian method; requires
  // n <= m, so a tall matrix is solved transposed.
  const bool transposed = rows > cols;
  const std::size_t n = transposed ? cols : rows;
  const std::size_t m = transposed ? rows : cols;
  const auto a = [&](std::size_t i, std::size_t j) {  // 1-based
    return transposed ? cost[(j - 1) * cols + (i - 1)] : cost[(i - 1) * cols + (j - 1)];
  };

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] == 0) continue;
    if (transposed) {
      result[j - 1] = static_cast<std::ptrdiff_t>(p[j] - 1);
    } else {
      result[p[j] - 1] = static_cast<std::ptrdiff_t>(j - 1);
    }
  }
  return result;
}

std::vector<Match> assign(std::span<const Point2> truth, std::span<const Point2> hyps,
                          double gate) {
  if (!(gate > 0.0)) throw ParameterError("gate must be > 0");
  std::vector<double> cost(truth.size() * hyps.size());
  for (std::size_t i = 0; i < truth.size(); ++i)
    for (std::size_t j = 0; j < hyps.size(); ++j)
      cost[i * hyps.size() + j] = distance(truth[i], hyps[j]);
  const auto pairing = solve_assignment(cost, truth.size(), hyps.size());
  std::vector<Match> matches;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (pairing[i] < 0) continue;
    const auto j = static_cast<std::size_t>(pairing[i]);
    const double d = cost[i * hyps.size() + j];
    if (d <= gate) matches.push_back({i, j, d});
  }
  return matches;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

template <typename T>
bool parse_field(std::string_view text, T& out) {
  text = trim(text);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

void check_unique_ids(const std::vector<TrackPoint>& frame, std::size_t t) {
  std::unordered_set<std::string> seen;
  for (const auto& p : frame) {
    if (!seen.insert(p.id).second) {
      throw ValidationError("duplicate object id '" + p.id + "' in frame " + std::to_string(t));
    }
  }
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

TrackSet parse_tracks(std::string_view text) {
  TrackSet tracks;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;

    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      fields.push_back(line.substr(start, comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    std::size_t frame = 0;
    TrackPoint point;
    if (fields.size() != 4 || !parse_field(fields[0], frame) ||
        !parse_field(fields[2], point.centroid.x) || !parse_field(fields[3], point.centroid.y) ||
        trim(fields[1]).empty()) {
      throw ValidationError("track line " + std::to_string(line_no) +
                            ": expected frame_index,object_id,x,y");
    }
    point.id = std::string(trim(fields[1]));
    if (tracks.frames.size() <= frame) tracks.frames.resize(frame + 1);
    tracks.frames[frame].push_back(std::move(point));
  }
  for (std::size_t t = 0; t < tracks.frames.size(); ++t) check_unique_ids(tracks.frames[t], t);
  return tracks;
}

TrackSet load_tracks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_tracks(buf.str());
}

std::string format_tracks(const TrackSet& tracks, std::size_t frame_offset) {
  std::string out = "# frame_index,object_id,x,y\n";
  for (std::size_t t = 0; t < tracks.frames.size(); ++t) {
    for (const auto& p : tracks.frames[t]) {
      out += std::to_string(t + frame_offset) + ',' + p.id + ',' + format_double(p.centroid.x) +
             ',' + format_double(p.centroid.y) + '\n';
    }
  }
  return out;
}

void write_tracks(const TrackSet& tracks, const std::filesystem::path& path,
                  std::size_t frame_offset) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << format_tracks(tracks, frame_offset);
  if (!out) throw IoError("write failed: " + path.string());
}

MotScore score_tracking(const TrackSet& truth, const TrackSet& hyps, double gate) {
  if (!(gate > 0.0)) throw ParameterError("gate must be > 0");
  const std::size_t frames = std::max(truth.frames.size(), hyps.frames.size());
  static const std::vector<TrackPoint> kEmpty;

  MotScore score;
  score.objects.resize(frames);
  score.matches.resize(frames);
  score.misses.resize(frames);
  score.false_positives.resize(frames);
  score.mismatches.resize(frames);

  std::unordered_map<std::string, std::string> last_match;  // truth id -> hyp id
  std::size_t total_objects = 0, total_matches = 0, total_errors = 0;

  for (std::size_t t = 0; t < frames; ++t) {
    const auto& gt = t < truth.frames.size() ? truth.frames[t] : kEmpty;
    const auto& hy = t < hyps.frames.size() ? hyps.frames[t] : kEmpty;
    check_unique_ids(gt, t);
    check_unique_ids(hy, t);

    std::unordered_map<std::string_view, std::size_t> hyp_index;
    for (std::size_t h = 0; h < hy.size(); ++h) hyp_index.emplace(hy[h].id, h);

    std::vector<char> gt_used(gt.size(), 0), hy_used(hy.size(), 0);
    std::size_t matched = 0, mismatched = 0;
    double dist_sum = 0.0;

    // Keep correspondences that are still valid.
    for (std::size_t i = 0; i < gt.size(); ++i) {
      const auto prev = last_match.find(gt[i].id);
      if (prev == last_match.end()) continue;
      const auto h = hyp_index.find(prev->second);
      if (h == hyp_index.end() || hy_used[h->second]) continue;
      const double d = distance(gt[i].centroid, hy[h->second].centroid);
      if (d > gate) continue;
      gt_used[i] = hy_used[h->second] = 1;
      ++matched;
      dist_sum += d;
    }

    std::vector<std::size_t> gt_free, hy_free;
    std::vector<Point2> gt_pts, hy_pts;
    for (std::size_t i = 0; i < gt.size(); ++i)
      if (!gt_used[i]) {
        gt_free.push_back(i);
        gt_pts.push_back(gt[i].centroid);
      }
    for (std::size_t h = 0; h < hy.size(); ++h)
      if (!hy_used[h]) {
        hy_free.push_back(h);
        hy_pts.push_back(hy[h].centroid);
      }
    for (const Match& m : assign(gt_pts, hy_pts, gate)) {
      const TrackPoint& g = gt[gt_free[m.truth]];
      const TrackPoint& h = hy[hy_free[m.hyp]];
      auto [it, inserted] = last_match.try_emplace(g.id, h.id);
      if (!inserted && it->second != h.id) {
        ++mismatched;
        it->second = h.id;
      }
      ++matched;
      dist_sum += m.distance;
    }

    score.objects[t] = gt.size();
    score.matches[t] = matched;
    score.misses[t] = gt.size() - matched;
    score.false_positives[t] = hy.size() - matched;
    score.mismatches[t] = mismatched;
    score.total_distance += dist_sum;
    total_objects += gt.size();
    total_matches += matched;
    total_errors += score.misses[t] + score.false_positives[t] + mismatched;
  }

  score.motp_defined = total_matches > 0;
  score.motp = score.motp_defined ? score.total_distance / double(total_matches) : 0.0;
  score.mota_defined = total_objects > 0;
  score.mota = score.mota_defined ? 1.0 - double(total_errors) / double(total_objects) : 0.0;
  return score;
}

std::vector<Point2> blobs_from_mask(const MaskGray& mask, int min_area) {
  const int w = mask.width;
  const int h = mask.height;
  std::vector<char> seen(mask.data.size(), 0);
  std::vector<std::pair<int, int>> stack;
  std::vector<Point2> centroids;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t start = std::size_t(y) * w + x;
      if (seen[start] || mask.data[start] == MaskGray::kBackground) continue;
      seen[start] = 1;
      stack.assign(1, {x, y});
      std::size_t area = 0;
      double sx = 0.0, sy = 0.0;
      while (!stack.empty()) {
        const auto [cx, cy] = stack.back();
        stack.pop_back();
        ++area;
        sx += cx;
        sy += cy;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = cx + dx, ny = cy + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            const std::size_t q = std::size_t(ny) * w + nx;
            if (seen[q] || mask.data[q] == MaskGray::kBackground) continue;
            seen[q] = 1;
            stack.push_back({nx, ny});
          }
        }
      }
      if (area >= static_cast<std::size_t>(min_area)) {
        centroids.push_back({sx / double(area), sy / double(area)});
      }
    }
  }
  return centroids;
}

TrackSet track_blobs(std::span<const std::vector<Point2>> detections, double gate) {
  TrackSet tracks;
  tracks.frames.resize(detections.size());
  std::size_t next_id = 0;
  for (std::size_t t = 0; t < detections.size(); ++t) {
    const auto& current = detections[t];
    std::vector<std::string> ids(current.size());
    if (t > 0) {
      const auto& prev_frame = tracks.frames[t - 1];
      std::vector<Point2> prev;
      prev.reserve(prev_frame.size());
      for (const auto& p : prev_frame) prev.push_back(p.centroid);
      for (const Match& m : assign(prev, current, gate)) ids[m.hyp] = prev_frame[m.truth].id;
    }
    for (std::size_t k = 0; k < current.size(); ++k) {
      if (ids[k].empty()) ids[k] = "h" + std::to_string(next_id++);
      tracks.frames[t].push_back({ids[k], current[k]});
    }
  }
  return tracks;
}

}  // namespace blockbgs
