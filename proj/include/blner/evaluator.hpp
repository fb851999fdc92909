#pragma once

#include <array>
#include <string>
#include <unordered_map>
#include <vector>

#include "blner/types.hpp"

namespace blner {

struct ScoreReport {
  long tp = 0;
  long fp = 0;
  long fn = 0;

  // 0/0 -> 0 throughout so empty-prediction runs stay scoreable.
  double precision() const { return tp + fp == 0 ? 0.0 : double(tp) / double(tp + fp); }
  double recall() const { return tp + fn == 0 ? 0.0 : double(tp) / double(tp + fn); }
  double f1() const {
    const double p = precision(), r = recall();
    return p + r == 0 ? 0.0 : 2 * p * r / (p + r);
  }
};

// Exact (start, end, type) micro matching over aligned sentence lists.
ScoreReport score(const std::vector<std::vector<Entity>>& pred,
                  const std::vector<std::vector<Entity>>& gold);
ScoreReport score(const std::vector<std::vector<Entity>>& pred, const Dataset& gold);

enum class Attribute { elen, tlen, econ, eden };
inline constexpr std::array<Attribute, 4> kAttributes = {
    Attribute::elen, Attribute::tlen, Attribute::econ, Attribute::eden};
const char* attribute_name(Attribute attr);  // eLen / tLen / eCon / eDen

enum class Bucket { xs, s, l, xl };
inline constexpr std::array<Bucket, 4> kBuckets = {Bucket::xs, Bucket::s, Bucket::l,
                                                   Bucket::xl};
const char* bucket_name(Bucket bucket);  // XS / S / L / XL

// Upper bounds of the XS/S/L buckets per attribute (XL is unbounded above for
// the length attributes, capped at 1 for the ratio attributes). Lengths are
// integer intervals closed on both sides; ratios are half-open above XS,
// which is closed at 0.
struct BucketTable {
  std::array<double, 3> elen{1, 2, 4};
  std::array<double, 3> tlen{7, 16, 31};
  std::array<double, 3> econ{0.1, 0.5, 0.9};
  std::array<double, 3> eden{0.01, 0.025, 0.05};

  bool operator==(const BucketTable&) const = default;
  static const BucketTable& published();
};

// Total over each attribute's domain; out-of-domain values raise
// ErrorKind::input.
Bucket bucketize(double value, Attribute attr,
                 const BucketTable& table = BucketTable::published());

// Train-side entity string statistics backing the label-consistency
// attribute.
class TrainEntityIndex {
 public:
  explicit TrainEntityIndex(const Dataset& train);

  // |{train entities with this surface and type}| / |{train entities with
  // this surface}|, 0 when the surface never occurs as a train entity.
  double consistency(const std::string& surface, const std::string& etype) const;

 private:
  struct SurfaceStat {
    long total = 0;
    std::unordered_map<std::string, long> per_type;
  };
  std::unordered_map<std::string, SurfaceStat> stats_;
};

struct EntityAttrs {
  double elen = 0;
  double econ = 0;
  Bucket elen_bucket = Bucket::xs;
  Bucket econ_bucket = Bucket::xs;
};

struct SentenceAttrs {
  double tlen = 0;
  double eden = 0;
  Bucket tlen_bucket = Bucket::xs;
  Bucket eden_bucket = Bucket::xs;
};

struct AttributeProfile {
  std::vector<std::vector<EntityAttrs>> entities;  // aligned with test gold
  std::vector<SentenceAttrs> sentences;
  BucketTable table;
};

AttributeProfile attributes(const Dataset& test, const Dataset& train,
                            const BucketTable& table = BucketTable::published());
AttributeProfile attributes(const Dataset& test, const TrainEntityIndex& index,
                            const BucketTable& table = BucketTable::published());

struct BucketReport {
  BucketTable table;
  // cells[attribute][bucket]
  std::array<std::array<ScoreReport, 4>, 4> cells;
  ScoreReport holistic;

  const ScoreReport& cell(Attribute a, Bucket b) const {
    return cells[static_cast<int>(a)][static_cast<int>(b)];
  }
};

// Entity-level attributes partition gold entities by bucket; unmatched
// predictions follow their overlapped gold, or their own attribute value
// when nothing overlaps. Sentence-level attributes partition sentences, so
// bucket counts sum exactly to the holistic report.
BucketReport bucket_report(const std::vector<std::vector<Entity>>& pred,
                           const Dataset& test, const Dataset& train,
                           const BucketTable& table = BucketTable::published());

struct HeatmapDelta {
  BucketTable table;
  std::array<std::array<double, 4>, 4> delta{};  // F1(a) - F1(b)
  std::array<std::array<bool, 4>, 4> empty{};    // no mass on either side
};

// Entrywise F1 difference; positive means `a` outperforms `b`. Mismatched
// bucket tables raise ErrorKind::config.
HeatmapDelta heatmap_delta(const BucketReport& a, const BucketReport& b);

struct ErrorReport {
  long fp = 0;
  long fn = 0;
  long boundary_errors = 0;
  long type_errors = 0;

  double be_rate() const {
    return fp + fn == 0 ? 0.0 : double(boundary_errors) / double(fp + fn);
  }
  double te_rate() const {
    return fp + fn == 0 ? 0.0 : double(type_errors) / double(fp + fn);
  }
};

// Every FP and FN classified independently: exact-boundary type mismatch is
// a type error, partial overlap a boundary error, disjoint mispredictions
// neither.
ErrorReport error_analysis(const std::vector<std::vector<Entity>>& pred,
                           const std::vector<std::vector<Entity>>& gold);

// Report emission.
std::string score_tsv(const ScoreReport& report);
std::string score_json(const ScoreReport& report);
std::string bucket_tsv(const BucketReport& report);
std::string bucket_json(const BucketReport& report);
std::string error_tsv(const ErrorReport& report);
std::string error_json(const ErrorReport& report);
std::string delta_tsv(const HeatmapDelta& delta);
std::string delta_json(const HeatmapDelta& delta);
std::string delta_grid(const HeatmapDelta& delta);  // aligned +/- text grid
std::string entity_profile_tsv(const AttributeProfile& profile);
std::string sentence_profile_tsv(const AttributeProfile& profile);

}  // namespace blner
