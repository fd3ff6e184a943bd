#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "blockbgs/imaging.hpp"

namespace blockbgs {

// ---------------------------------------------------------------------------
// Mask quality

struct MaskScore {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;  // tp / (tp + fp), 0 when undefined
  double recall = 0.0;     // tp / (tp + fn), 0 when undefined
  double f_measure = 0.0;  // harmonic mean of the two, 0 when undefined
};

MaskScore make_mask_score(std::size_t tp, std::size_t fp, std::size_t fn);

/// Pixel counts of predicted against ground truth (nonzero = foreground).
/// Throws ValidationError on a dimension mismatch.
MaskScore score_mask(const MaskGray& predicted, const MaskGray& truth);

// ---------------------------------------------------------------------------
// Assignment

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

double distance(Point2 a, Point2 b);

/// Minimum-cost one-to-one assignment of a rows x cols cost matrix
/// (row-major). Returns, per row, the assigned column or -1. Every row is
/// assigned when rows <= cols, otherwise every column is.
std::vector<std::ptrdiff_t> solve_assignment(std::span<const double> cost, std::size_t rows,
                                             std::size_t cols);

struct Match {
  std::size_t truth = 0;
  std::size_t hyp = 0;
  double distance = 0.0;
};

/// Minimum total Euclidean distance pairing of truth and hypothesis points;
/// pairs farther apart than `gate` are then dropped. Matches are ordered by
/// truth index.
std::vector<Match> assign(std::span<const Point2> truth, std::span<const Point2> hyps,
                          double gate);

// ---------------------------------------------------------------------------
// Tracking

struct TrackPoint {
  std::string id;
  Point2 centroid;
};

/// Objects present in each frame, indexed by frame number.
struct TrackSet {
  std::vector<std::vector<TrackPoint>> frames;
};

/// Parses `frame_index,object_id,x,y` records; blank lines and lines
/// starting with '#' are skipped. Throws ValidationError on malformed
/// records or a duplicated id within one frame.
TrackSet parse_tracks(std::string_view text);
TrackSet load_tracks(const std::filesystem::path& path);
std::string format_tracks(const TrackSet& tracks, std::size_t frame_offset = 0);
void write_tracks(const TrackSet& tracks, const std::filesystem::path& path,
                  std::size_t frame_offset = 0);

struct MotScore {
  double motp = 0.0;  // mean matched distance, pixels
  double mota = 0.0;
  bool motp_defined = false;  // false when no matches at all
  bool mota_defined = false;  // false when the ground truth is empty

  // Per-frame counts.
  std::vector<std::size_t> objects;          // g_t
  std::vector<std::size_t> matches;          // c_t
  std::vector<std::size_t> misses;           // m_t
  std::vector<std::size_t> false_positives;  // fp_t
  std::vector<std::size_t> mismatches;       // mme_t
  double total_distance = 0.0;
};

/// CLEAR-MOT scoring. Correspondences from earlier frames are kept while
/// still within the gate; the rest are assigned with the Hungarian method.
/// A mismatch is counted when a truth object is matched to a different
/// hypothesis id than at its previous match.
MotScore score_tracking(const TrackSet& truth, const TrackSet& hyps, double gate);

/// Centroids of the 8-connected foreground components with at least
/// `min_area` pixels, in raster order of each component's first pixel.
std::vector<Point2> blobs_from_mask(const MaskGray& mask, int min_area);

/// Links per-frame detections into tracks: each detection inherits the id of
/// the previous-frame detection it is assigned to (within `gate`), otherwise
/// a fresh id is issued.
TrackSet track_blobs(std::span<const std::vector<Point2>> detections, double gate);

}  // namespace blockbgs
