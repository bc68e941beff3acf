#pragma once

// Evaluation: per-class IoU over mask sequences and detection mAP at several
// IoU thresholds, plus the flip-noise degradation study and its report tables.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "avsim/geometry.hpp"
#include "avsim/perception.hpp"

namespace avsim {

class DimMismatch : public std::runtime_error {
 public:
  explicit DimMismatch(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Segmentation

struct ClassCounts {
  long tp = 0, fp = 0, fn = 0;
};

struct IouReport {
  std::map<int, double> per_class;
  double miou = 0.0;
};

inline double iou_from_counts(const ClassCounts& c) {
  const long denom = c.tp + c.fp + c.fn;
  return denom == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(denom);
}

inline IouReport iou_report(const std::map<int, ClassCounts>& counts) {
  IouReport r;
  double sum = 0.0;
  for (const auto& [c, k] : counts) {
    r.per_class[c] = iou_from_counts(k);
    sum += r.per_class[c];
  }
  r.miou = counts.empty() ? 1.0 : sum / static_cast<double>(counts.size());
  return r;
}

/// Pixel counts accumulated over the whole sequence. `classes` empty means all classes.
inline std::map<int, ClassCounts> segmentation_counts(const std::vector<ImageGrid>& pred, const std::vector<ImageGrid>& gt,
                                                      std::vector<int> classes = {}) {
  if (pred.size() != gt.size())
    throw DimMismatch(fmt::format("sequence lengths differ: {} predicted vs {} ground truth", pred.size(), gt.size()));
  const int k = gt.empty() ? 0 : gt.front().class_count();
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!pred[i].same_shape(gt[i]) || gt[i].class_count() != k || pred[i].class_count() != k)
      throw DimMismatch(fmt::format("frame {}: {}x{} ({} classes) vs {}x{} ({} classes)", i, pred[i].width(),
                                    pred[i].height(), pred[i].class_count(), gt[i].width(), gt[i].height(),
                                    gt[i].class_count()));
  }
  if (classes.empty())
    for (int c = 0; c < k; ++c) classes.push_back(c);

  std::vector<long> confusion(static_cast<std::size_t>(k) * k, 0);  // [gt][pred]
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const auto& g = gt[i].data();
    const auto& p = pred[i].data();
    for (std::size_t j = 0; j < g.size(); ++j) ++confusion[static_cast<std::size_t>(g[j]) * k + p[j]];
  }
  std::map<int, ClassCounts> out;
  for (int c : classes) {
    if (c < 0 || c >= std::max(k, 1)) throw DimMismatch(fmt::format("class {} outside [0, {})", c, k));
    ClassCounts cc;
    for (int o = 0; o < k; ++o) {
      if (o == c) cc.tp += confusion[static_cast<std::size_t>(c) * k + c];
      else {
        cc.fn += confusion[static_cast<std::size_t>(c) * k + o];
        cc.fp += confusion[static_cast<std::size_t>(o) * k + c];
      }
    }
    out[c] = cc;
  }
  return out;
}

/// IoU = TP / (TP + FP + FN) per class. A class absent from both sides scores 1.
inline IouReport segmentation_iou(const std::vector<ImageGrid>& pred, const std::vector<ImageGrid>& gt,
                                  std::vector<int> classes = {}) {
  return iou_report(segmentation_counts(pred, gt, std::move(classes)));
}

/// Ratio of expected counts when every pixel independently keeps its class
/// with probability 1 - p and otherwise moves to one of the other K - 1
/// classes uniformly. `gt_pixels[c]` is the ground-truth pixel count of class c:
///   TP = n_c (1 - p),  FN = n_c p,  FP = p (N - n_c) / (K - 1).
inline IouReport expected_flip_iou(const std::vector<long>& gt_pixels, double p) {
  const int k = static_cast<int>(gt_pixels.size());
  IouReport r;
  if (k == 0) {
    r.miou = 1.0;
    return r;
  }
  long total = 0;
  for (long n : gt_pixels) total += n;
  double sum = 0.0;
  for (int c = 0; c < k; ++c) {
    const double n = static_cast<double>(gt_pixels[c]);
    const double tp = n * (1 - p);
    const double fn = n * p;
    const double fp = k > 1 ? static_cast<double>(total - gt_pixels[c]) * p / (k - 1) : 0.0;
    const double denom = tp + fp + fn;
    r.per_class[c] = denom == 0.0 ? 1.0 : tp / denom;
    sum += r.per_class[c];
  }
  r.miou = sum / k;
  return r;
}

inline std::vector<long> class_histogram(const std::vector<ImageGrid>& masks, int class_count) {
  std::vector<long> h(static_cast<std::size_t>(class_count), 0);
  for (const auto& m : masks)
    for (std::uint8_t v : m.data()) ++h[v];
  return h;
}

// ---------------------------------------------------------------------------
// Detection

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

struct PrCurve {
  std::vector<PrPoint> points;  // one per distinct score, descending score
  double ap = 0.0;
};

struct ScoredMatch {
  double score = 0.0;
  bool true_positive = false;
};

/// Greedy one-to-one matching within one frame. Predictions go in
/// detection_order; each takes the unmatched ground-truth box of its class
/// with the highest IoU (lowest index on ties) if that IoU reaches the threshold.
inline std::vector<ScoredMatch> match_frame(std::vector<BoundingBox> pred, const std::vector<BoundingBox>& gt,
                                            ObjectClass cls, double iou_threshold) {
  std::sort(pred.begin(), pred.end(), detection_order);
  std::vector<bool> used(gt.size(), false);
  std::vector<ScoredMatch> out;
  for (const auto& p : pred) {
    if (p.class_id != cls) continue;
    int best = -1;
    double best_iou = -1.0;
    for (std::size_t j = 0; j < gt.size(); ++j) {
      if (used[j] || gt[j].class_id != cls) continue;
      const double v = iou_boxes(p, gt[j]);
      if (v > best_iou) {
        best_iou = v;
        best = static_cast<int>(j);
      }
    }
    const bool tp = best >= 0 && best_iou >= iou_threshold;
    if (tp) used[best] = true;
    out.push_back({p.score, tp});
  }
  return out;
}

/// PR curve from pooled matches. Predictions with equal scores enter together,
/// so the curve does not depend on frame order. AP integrates the monotone
/// precision envelope over every recall step (all-points interpolation).
inline PrCurve pr_curve(std::vector<ScoredMatch> matches, long gt_count) {
  PrCurve curve;
  if (gt_count <= 0) return curve;
  std::sort(matches.begin(), matches.end(), [](const ScoredMatch& a, const ScoredMatch& b) { return a.score > b.score; });
  long tp = 0, seen = 0;
  for (std::size_t i = 0; i < matches.size();) {
    std::size_t j = i;
    while (j < matches.size() && matches[j].score == matches[i].score) {
      tp += matches[j].true_positive;
      ++seen;
      ++j;
    }
    curve.points.push_back({static_cast<double>(tp) / gt_count, static_cast<double>(tp) / seen});
    i = j;
  }
  double envelope = 0.0, ap = 0.0;
  for (std::size_t i = curve.points.size(); i-- > 0;) {
    envelope = std::max(envelope, curve.points[i].precision);
    const double prev_recall = i == 0 ? 0.0 : curve.points[i - 1].recall;
    ap += (curve.points[i].recall - prev_recall) * envelope;
  }
  curve.ap = ap;
  return curve;
}

inline PrCurve class_pr_curve(const std::vector<std::vector<BoundingBox>>& pred,
                              const std::vector<std::vector<BoundingBox>>& gt, ObjectClass cls, double iou_threshold) {
  if (pred.size() != gt.size())
    throw DimMismatch(fmt::format("sequence lengths differ: {} predicted vs {} ground truth", pred.size(), gt.size()));
  std::vector<ScoredMatch> all;
  long gt_count = 0;
  for (std::size_t f = 0; f < gt.size(); ++f) {
    for (const auto& g : gt[f]) gt_count += g.class_id == cls;
    const auto m = match_frame(pred[f], gt[f], cls, iou_threshold);
    all.insert(all.end(), m.begin(), m.end());
  }
  return pr_curve(std::move(all), gt_count);
}

inline const std::vector<double>& default_iou_thresholds() {
  static const std::vector<double> t{0.5, 0.7, 0.75};
  return t;
}

/// mAP per IoU threshold, averaged over the classes that have at least one
/// ground-truth box. With no ground truth at all the score is 1 when nothing
/// was predicted either and 0 otherwise.
inline std::map<double, double> detection_map(const std::vector<std::vector<BoundingBox>>& pred,
                                              const std::vector<std::vector<BoundingBox>>& gt,
                                              const std::vector<double>& iou_thresholds = default_iou_thresholds()) {
  if (pred.size() != gt.size())
    throw DimMismatch(fmt::format("sequence lengths differ: {} predicted vs {} ground truth", pred.size(), gt.size()));
  std::vector<ObjectClass> present;
  for (int c = 1; c < kObjectClassCount; ++c) {
    const auto cls = static_cast<ObjectClass>(c);
    const bool any = std::any_of(gt.begin(), gt.end(), [&](const auto& frame) {
      return std::any_of(frame.begin(), frame.end(), [&](const BoundingBox& b) { return b.class_id == cls; });
    });
    if (any) present.push_back(cls);
  }
  const bool any_pred = std::any_of(pred.begin(), pred.end(), [](const auto& f) { return !f.empty(); });
  std::map<double, double> out;
  for (double t : iou_thresholds) {
    if (present.empty()) {
      out[t] = any_pred ? 0.0 : 1.0;
      continue;
    }
    double sum = 0.0;
    for (ObjectClass c : present) sum += class_pr_curve(pred, gt, c, t).ap;
    out[t] = sum / static_cast<double>(present.size());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sequence evaluation and reports

enum class Branch { Object, Drivable, Lane };

inline std::vector<std::string> branch_class_names(Branch b) {
  switch (b) {
    case Branch::Object: {
      std::vector<std::string> n;
      for (int c = 0; c < kObjectClassCount; ++c) n.emplace_back(to_string(static_cast<ObjectClass>(c)));
      return n;
    }
    case Branch::Drivable: return {"Background", "Drivable area"};
    case Branch::Lane: return {"Background", "Lanes"};
  }
  return {};
}

inline const char* branch_title(Branch b) {
  switch (b) {
    case Branch::Object: return "Object segmentation";
    case Branch::Drivable: return "Drivable area segmentation";
    case Branch::Lane: return "Lane segmentation";
  }
  return "?";
}

inline const ImageGrid& branch_mask(const PerceptionFrame& f, Branch b) {
  switch (b) {
    case Branch::Object: return f.object_mask;
    case Branch::Drivable: return f.drivable_mask;
    case Branch::Lane: return f.lane_mask;
  }
  return f.object_mask;
}

struct EvalRow {
  std::string label;
  std::map<double, double> map;  // IoU threshold -> mAP
  IouReport object, drivable, lane;

  const IouReport& branch(Branch b) const {
    return b == Branch::Object ? object : b == Branch::Drivable ? drivable : lane;
  }
};

inline std::vector<ImageGrid> branch_masks(const std::vector<PerceptionFrame>& frames, Branch b) {
  std::vector<ImageGrid> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(branch_mask(f, b));
  return out;
}

inline EvalRow evaluate_frames(std::string label, const std::vector<PerceptionFrame>& pred,
                               const std::vector<PerceptionFrame>& gt) {
  if (pred.size() != gt.size())
    throw DimMismatch(fmt::format("sequence lengths differ: {} predicted vs {} ground truth", pred.size(), gt.size()));
  EvalRow row;
  row.label = std::move(label);
  std::vector<std::vector<BoundingBox>> pd, gd;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    pd.push_back(pred[i].detections);
    gd.push_back(gt[i].detections);
  }
  row.map = detection_map(pd, gd);
  row.object = segmentation_iou(branch_masks(pred, Branch::Object), branch_masks(gt, Branch::Object));
  row.drivable = segmentation_iou(branch_masks(pred, Branch::Drivable), branch_masks(gt, Branch::Drivable));
  row.lane = segmentation_iou(branch_masks(pred, Branch::Lane), branch_masks(gt, Branch::Lane));
  return row;
}

/// Runs `backend` over the frames and postprocesses each one.
inline std::vector<PerceptionFrame> run_backend(InferenceBackend& backend, const std::vector<CameraFrame>& cams,
                                                double score_threshold = 0.5) {
  std::vector<PerceptionFrame> out;
  out.reserve(cams.size());
  for (const auto& c : cams) out.push_back(postprocess(backend.infer(c), score_threshold, {kImageWidth, kImageHeight}, c.timestamp));
  return out;
}

struct DegradationRow {
  double flip_prob = 0.0;
  EvalRow measured;
  IouReport expected_object, expected_drivable, expected_lane;  // flip model applied to the clean masks
};

/// Re-runs `clean` through a NoisyBackend at every flip probability and scores
/// each run against the clean output.
inline std::vector<DegradationRow> degradation_experiment(std::shared_ptr<InferenceBackend> clean,
                                                          const std::vector<double>& flip_probs,
                                                          const std::vector<CameraFrame>& cams, std::uint64_t seed) {
  const std::vector<PerceptionFrame> gt = run_backend(*clean, cams);
  std::vector<DegradationRow> rows;
  for (double p : flip_probs) {
    NoisyBackend noisy(clean, p, seed);
    DegradationRow row;
    row.flip_prob = p;
    row.measured = evaluate_frames(fmt::format("p={:.3f}", p), run_backend(noisy, cams), gt);
    row.expected_object = expected_flip_iou(class_histogram(branch_masks(gt, Branch::Object), kObjectClassCount), p);
    row.expected_drivable = expected_flip_iou(class_histogram(branch_masks(gt, Branch::Drivable), kDrivableClassCount), p);
    row.expected_lane = expected_flip_iou(class_histogram(branch_masks(gt, Branch::Lane), kLaneClassCount), p);
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace detail {

inline std::string aligned_table(const std::string& title, const std::vector<std::string>& header,
                                 const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t i = 0; i < header.size(); ++i) width[i] = header[i].size();
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.size() && i < width.size(); ++i) width[i] = std::max(width[i], r[i].size());
  auto line = [&](const std::vector<std::string>& cells) {
    std::string s = "|";
    for (std::size_t i = 0; i < width.size(); ++i)
      s += fmt::format(" {:>{}} |", i < cells.size() ? cells[i] : "", width[i]);
    return s + "\n";
  };
  std::string rule = "+";
  for (std::size_t w : width) rule += std::string(w + 2, '-') + "+";
  rule += "\n";
  std::string out = title + "\n" + rule + line(header) + rule;
  for (const auto& r : rows) out += line(r);
  return out + rule;
}

inline std::string pct(double v) { return fmt::format("{:.2f}", 100.0 * v); }

}  // namespace detail

/// Detection table: one row per evaluated run, mAP in percent per threshold.
inline std::string format_detection_table(const std::vector<EvalRow>& rows) {
  std::vector<std::string> header{"Run"};
  for (double t : default_iou_thresholds()) header.push_back(fmt::format("mAP{} [%]", std::lround(t * 100)));
  std::vector<std::vector<std::string>> body;
  for (const auto& r : rows) {
    std::vector<std::string> cells{r.label};
    for (const auto& [_, v] : r.map) cells.push_back(fmt::format("{:.1f}", 100.0 * v));
    body.push_back(std::move(cells));
  }
  return detail::aligned_table("Object detection", header, body);
}

/// Segmentation table for one branch: mIoU then per-class IoU, in percent.
inline std::string format_iou_table(Branch b, const std::vector<EvalRow>& rows) {
  std::vector<std::string> header{"Run", "MIoU [%]"};
  for (const auto& n : branch_class_names(b)) header.push_back(n + " [%]");
  std::vector<std::vector<std::string>> body;
  for (const auto& r : rows) {
    const IouReport& rep = r.branch(b);
    std::vector<std::string> cells{r.label, detail::pct(rep.miou)};
    for (const auto& [_, v] : rep.per_class) cells.push_back(detail::pct(v));
    body.push_back(std::move(cells));
  }
  return detail::aligned_table(branch_title(b), header, body);
}

inline std::string format_report(const std::vector<EvalRow>& rows) {
  return format_detection_table(rows) + "\n" + format_iou_table(Branch::Drivable, rows) + "\n" +
         format_iou_table(Branch::Lane, rows) + "\n" + format_iou_table(Branch::Object, rows);
}

/// One line per run: label, mAP per threshold, then mIoU and per-class IoU per branch.
inline std::string format_report_csv(const std::vector<EvalRow>& rows) {
  std::string s = "run";
  for (double t : default_iou_thresholds()) s += fmt::format(",map{}", std::lround(t * 100));
  for (Branch b : {Branch::Drivable, Branch::Lane, Branch::Object}) {
    const std::string prefix = b == Branch::Object ? "obj" : b == Branch::Drivable ? "drv" : "lane";
    s += "," + prefix + "_miou";
    for (int c = 0; c < static_cast<int>(branch_class_names(b).size()); ++c) s += fmt::format(",{}_iou{}", prefix, c);
  }
  s += "\n";
  for (const auto& r : rows) {
    s += r.label;
    for (const auto& [_, v] : r.map) s += fmt::format(",{:.6f}", v);
    for (Branch b : {Branch::Drivable, Branch::Lane, Branch::Object}) {
      s += fmt::format(",{:.6f}", r.branch(b).miou);
      for (const auto& [_, v] : r.branch(b).per_class) s += fmt::format(",{:.6f}", v);
    }
    s += "\n";
  }
  return s;
}

/// Measured against expected mIoU per branch for each flip probability.
inline std::string format_degradation_table(const std::vector<DegradationRow>& rows) {
  std::vector<std::vector<std::string>> body;
  for (const auto& r : rows) {
    body.push_back({fmt::format("{:.3f}", r.flip_prob), detail::pct(r.measured.drivable.miou), detail::pct(r.expected_drivable.miou),
                    detail::pct(r.measured.lane.miou), detail::pct(r.expected_lane.miou),
                    detail::pct(r.measured.object.miou), detail::pct(r.expected_object.miou)});
  }
  return detail::aligned_table("Flip-noise degradation (MIoU [%], measured / expected)",
                               {"Flip prob", "Drivable", "exp.", "Lanes", "exp.", "Objects", "exp."}, body);
}

}  // namespace avsim
