#include "blner/evaluator.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <json.hpp>
#include <sstream>
#include <tuple>

namespace blner {

namespace {

std::string fmt_metric(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string fmt_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// pred_match[i] / gold_match[j] hold the matched counterpart index, -1 when
// unmatched. Matching is exact on (start, end, type); duplicates pair up
// one-to-one in order.
struct MatchResult {
  std::vector<int> pred_match;
  std::vector<int> gold_match;
};

MatchResult match_entities(const std::vector<Entity>& pred,
                           const std::vector<Entity>& gold) {
  MatchResult m;
  m.pred_match.assign(pred.size(), -1);
  m.gold_match.assign(gold.size(), -1);
  std::map<std::tuple<int, int, std::string>, std::vector<int>> by_triple;
  for (int j = static_cast<int>(gold.size()) - 1; j >= 0; --j)
    by_triple[{gold[j].start, gold[j].end, gold[j].etype}].push_back(j);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto it = by_triple.find({pred[i].start, pred[i].end, pred[i].etype});
    if (it == by_triple.end() || it->second.empty()) continue;
    const int j = it->second.back();
    it->second.pop_back();
    m.pred_match[i] = static_cast<int>(j);
    m.gold_match[j] = static_cast<int>(i);
  }
  return m;
}

void check_aligned(std::size_t pred, std::size_t gold) {
  if (pred != gold)
    fail(ErrorKind::input, "prediction list covers " + std::to_string(pred) +
                               " sentences, gold covers " + std::to_string(gold));
}

}  // namespace

ScoreReport score(const std::vector<std::vector<Entity>>& pred,
                  const std::vector<std::vector<Entity>>& gold) {
  check_aligned(pred.size(), gold.size());
  ScoreReport report;
  for (std::size_t s = 0; s < pred.size(); ++s) {
    const MatchResult m = match_entities(pred[s], gold[s]);
    for (int pm : m.pred_match) {
      if (pm >= 0)
        ++report.tp;
      else
        ++report.fp;
    }
    for (int gm : m.gold_match)
      if (gm < 0) ++report.fn;
  }
  return report;
}

ScoreReport score(const std::vector<std::vector<Entity>>& pred, const Dataset& gold) {
  std::vector<std::vector<Entity>> lists;
  lists.reserve(gold.sentences.size());
  for (const Sentence& s : gold.sentences) lists.push_back(s.gold);
  return score(pred, lists);
}

const char* attribute_name(Attribute attr) {
  switch (attr) {
    case Attribute::elen: return "eLen";
    case Attribute::tlen: return "tLen";
    case Attribute::econ: return "eCon";
    case Attribute::eden: return "eDen";
  }
  return "?";
}

const char* bucket_name(Bucket bucket) {
  switch (bucket) {
    case Bucket::xs: return "XS";
    case Bucket::s: return "S";
    case Bucket::l: return "L";
    case Bucket::xl: return "XL";
  }
  return "?";
}

const BucketTable& BucketTable::published() {
  static const BucketTable table;
  return table;
}

Bucket bucketize(double value, Attribute attr, const BucketTable& table) {
  const bool ratio = attr == Attribute::econ || attr == Attribute::eden;
  if (ratio) {
    if (!(value >= 0 && value <= 1))
      fail(ErrorKind::input, std::string(attribute_name(attr)) + " value " +
                                 fmt_value(value) + " outside [0, 1]");
  } else if (!(value >= 1)) {
    fail(ErrorKind::input, std::string(attribute_name(attr)) + " value " +
                               fmt_value(value) + " below 1");
  }
  const std::array<double, 3>& bounds = attr == Attribute::elen  ? table.elen
                                        : attr == Attribute::tlen ? table.tlen
                                        : attr == Attribute::econ ? table.econ
                                                                  : table.eden;
  if (value <= bounds[0]) return Bucket::xs;
  if (value <= bounds[1]) return Bucket::s;
  if (value <= bounds[2]) return Bucket::l;
  return Bucket::xl;
}

TrainEntityIndex::TrainEntityIndex(const Dataset& train) {
  for (const Sentence& s : train.sentences)
    for (const Entity& e : s.gold) {
      SurfaceStat& stat = stats_[surface_of(s, e.start, e.end)];
      ++stat.total;
      ++stat.per_type[e.etype];
    }
}

double TrainEntityIndex::consistency(const std::string& surface,
                                     const std::string& etype) const {
  const auto it = stats_.find(surface);
  if (it == stats_.end()) return 0;
  const auto ty = it->second.per_type.find(etype);
  if (ty == it->second.per_type.end()) return 0;
  return static_cast<double>(ty->second) / static_cast<double>(it->second.total);
}

AttributeProfile attributes(const Dataset& test, const TrainEntityIndex& index,
                            const BucketTable& table) {
  AttributeProfile profile;
  profile.table = table;
  profile.entities.reserve(test.sentences.size());
  profile.sentences.reserve(test.sentences.size());
  for (const Sentence& s : test.sentences) {
    SentenceAttrs sa;
    sa.tlen = s.size();
    sa.eden = static_cast<double>(s.gold.size()) / static_cast<double>(s.size());
    sa.tlen_bucket = bucketize(sa.tlen, Attribute::tlen, table);
    sa.eden_bucket = bucketize(sa.eden, Attribute::eden, table);
    profile.sentences.push_back(sa);

    std::vector<EntityAttrs> row;
    row.reserve(s.gold.size());
    for (const Entity& e : s.gold) {
      EntityAttrs ea;
      ea.elen = e.length();
      ea.econ = index.consistency(surface_of(s, e.start, e.end), e.etype);
      ea.elen_bucket = bucketize(ea.elen, Attribute::elen, table);
      ea.econ_bucket = bucketize(ea.econ, Attribute::econ, table);
      row.push_back(ea);
    }
    profile.entities.push_back(std::move(row));
  }
  return profile;
}

AttributeProfile attributes(const Dataset& test, const Dataset& train,
                            const BucketTable& table) {
  return attributes(test, TrainEntityIndex(train), table);
}

namespace {

// Unmatched predictions follow the gold entity they overlap the most (ties:
// earlier start, then earlier end); with no overlap they carry their own
// attribute value.
int anchor_gold(const Entity& pred, const std::vector<Entity>& gold) {
  int best = -1, best_overlap = 0;
  for (std::size_t j = 0; j < gold.size(); ++j) {
    const int lo = std::max(pred.start, gold[j].start);
    const int hi = std::min(pred.end, gold[j].end);
    const int overlap = hi - lo + 1;
    if (overlap <= 0) continue;
    if (best < 0 || overlap > best_overlap ||
        (overlap == best_overlap &&
         (gold[j].start < gold[best].start ||
          (gold[j].start == gold[best].start && gold[j].end < gold[best].end))))
      best = static_cast<int>(j), best_overlap = overlap;
  }
  return best;
}

}  // namespace

BucketReport bucket_report(const std::vector<std::vector<Entity>>& pred,
                           const Dataset& test, const Dataset& train,
                           const BucketTable& table) {
  check_aligned(pred.size(), test.sentences.size());
  const TrainEntityIndex index(train);
  const AttributeProfile profile = attributes(test, index, table);

  BucketReport report;
  report.table = table;
  auto cell = [&report](Attribute a, Bucket b) -> ScoreReport& {
    return report.cells[static_cast<int>(a)][static_cast<int>(b)];
  };

  for (std::size_t s = 0; s < pred.size(); ++s) {
    const Sentence& sentence = test.sentences[s];
    const std::vector<Entity>& gold = sentence.gold;
    const MatchResult m = match_entities(pred[s], gold);

    const Bucket tlen_bucket = profile.sentences[s].tlen_bucket;
    const Bucket eden_bucket = profile.sentences[s].eden_bucket;
    for (std::size_t i = 0; i < pred[s].size(); ++i) {
      const bool hit = m.pred_match[i] >= 0;
      if (hit) {
        ++cell(Attribute::tlen, tlen_bucket).tp;
        ++cell(Attribute::eden, eden_bucket).tp;
        ++report.holistic.tp;
      } else {
        ++cell(Attribute::tlen, tlen_bucket).fp;
        ++cell(Attribute::eden, eden_bucket).fp;
        ++report.holistic.fp;
      }
    }
    for (std::size_t j = 0; j < gold.size(); ++j) {
      if (m.gold_match[j] >= 0) continue;
      ++cell(Attribute::tlen, tlen_bucket).fn;
      ++cell(Attribute::eden, eden_bucket).fn;
      ++report.holistic.fn;
    }

    for (std::size_t j = 0; j < gold.size(); ++j) {
      const EntityAttrs& ea = profile.entities[s][j];
      if (m.gold_match[j] >= 0) {
        ++cell(Attribute::elen, ea.elen_bucket).tp;
        ++cell(Attribute::econ, ea.econ_bucket).tp;
      } else {
        ++cell(Attribute::elen, ea.elen_bucket).fn;
        ++cell(Attribute::econ, ea.econ_bucket).fn;
      }
    }
    for (std::size_t i = 0; i < pred[s].size(); ++i) {
      if (m.pred_match[i] >= 0) continue;
      const Entity& p = pred[s][i];
      const int anchor = anchor_gold(p, gold);
      Bucket elen_bucket, econ_bucket;
      if (anchor >= 0) {
        elen_bucket = profile.entities[s][anchor].elen_bucket;
        econ_bucket = profile.entities[s][anchor].econ_bucket;
      } else {
        elen_bucket = bucketize(p.length(), Attribute::elen, table);
        econ_bucket = bucketize(
            index.consistency(surface_of(sentence, p.start, p.end), p.etype),
            Attribute::econ, table);
      }
      ++cell(Attribute::elen, elen_bucket).fp;
      ++cell(Attribute::econ, econ_bucket).fp;
    }
  }
  return report;
}

HeatmapDelta heatmap_delta(const BucketReport& a, const BucketReport& b) {
  if (!(a.table == b.table))
    fail(ErrorKind::config, "bucket reports use different bucket tables");
  HeatmapDelta delta;
  delta.table = a.table;
  for (const Attribute attr : kAttributes)
    for (const Bucket bucket : kBuckets) {
      const ScoreReport& ca = a.cell(attr, bucket);
      const ScoreReport& cb = b.cell(attr, bucket);
      const int ai = static_cast<int>(attr), bi = static_cast<int>(bucket);
      if (ca.tp + ca.fp + ca.fn == 0 && cb.tp + cb.fp + cb.fn == 0) {
        delta.empty[ai][bi] = true;
        continue;
      }
      delta.delta[ai][bi] = ca.f1() - cb.f1();
    }
  return delta;
}

ErrorReport error_analysis(const std::vector<std::vector<Entity>>& pred,
                           const std::vector<std::vector<Entity>>& gold) {
  check_aligned(pred.size(), gold.size());
  ErrorReport report;
  auto classify = [&report](const Entity& miss, const std::vector<Entity>& others) {
    for (const Entity& o : others)
      if (o.start == miss.start && o.end == miss.end && o.etype != miss.etype) {
        ++report.type_errors;
        return;
      }
    for (const Entity& o : others)
      if (overlaps(o, miss)) {
        ++report.boundary_errors;
        return;
      }
  };
  for (std::size_t s = 0; s < pred.size(); ++s) {
    const MatchResult m = match_entities(pred[s], gold[s]);
    for (std::size_t i = 0; i < pred[s].size(); ++i)
      if (m.pred_match[i] < 0) {
        ++report.fp;
        classify(pred[s][i], gold[s]);
      }
    for (std::size_t j = 0; j < gold[s].size(); ++j)
      if (m.gold_match[j] < 0) {
        ++report.fn;
        classify(gold[s][j], pred[s]);
      }
  }
  return report;
}

std::string score_tsv(const ScoreReport& report) {
  std::ostringstream out;
  out << "tp\tfp\tfn\tprecision\trecall\tf1\n"
      << report.tp << '\t' << report.fp << '\t' << report.fn << '\t'
      << fmt_metric(report.precision()) << '\t' << fmt_metric(report.recall()) << '\t'
      << fmt_metric(report.f1()) << '\n';
  return out.str();
}

namespace {

nlohmann::json score_to_json(const ScoreReport& report) {
  return {{"tp", report.tp},
          {"fp", report.fp},
          {"fn", report.fn},
          {"precision", report.precision()},
          {"recall", report.recall()},
          {"f1", report.f1()}};
}

}  // namespace

std::string score_json(const ScoreReport& report) {
  return score_to_json(report).dump(2) + "\n";
}

std::string bucket_tsv(const BucketReport& report) {
  std::ostringstream out;
  out << "attribute\tbucket\ttp\tfp\tfn\tprecision\trecall\tf1\n";
  auto row = [&out](const std::string& attr, const std::string& bucket,
                    const ScoreReport& r) {
    out << attr << '\t' << bucket << '\t' << r.tp << '\t' << r.fp << '\t' << r.fn
        << '\t' << fmt_metric(r.precision()) << '\t' << fmt_metric(r.recall()) << '\t'
        << fmt_metric(r.f1()) << '\n';
  };
  for (const Attribute attr : kAttributes)
    for (const Bucket bucket : kBuckets)
      row(attribute_name(attr), bucket_name(bucket), report.cell(attr, bucket));
  row("holistic", "-", report.holistic);
  return out.str();
}

std::string bucket_json(const BucketReport& report) {
  nlohmann::json j;
  j["holistic"] = score_to_json(report.holistic);
  for (const Attribute attr : kAttributes) {
    nlohmann::json per;
    for (const Bucket bucket : kBuckets)
      per[bucket_name(bucket)] = score_to_json(report.cell(attr, bucket));
    j[attribute_name(attr)] = per;
  }
  return j.dump(2) + "\n";
}

std::string error_tsv(const ErrorReport& report) {
  std::ostringstream out;
  out << "fp\tfn\tboundary_errors\ttype_errors\tbe_rate\tte_rate\n"
      << report.fp << '\t' << report.fn << '\t' << report.boundary_errors << '\t'
      << report.type_errors << '\t' << fmt_metric(report.be_rate()) << '\t'
      << fmt_metric(report.te_rate()) << '\n';
  return out.str();
}

std::string error_json(const ErrorReport& report) {
  const nlohmann::json j = {{"fp", report.fp},
                            {"fn", report.fn},
                            {"boundary_errors", report.boundary_errors},
                            {"type_errors", report.type_errors},
                            {"be_rate", report.be_rate()},
                            {"te_rate", report.te_rate()}};
  return j.dump(2) + "\n";
}

std::string delta_tsv(const HeatmapDelta& delta) {
  std::ostringstream out;
  out << "attribute\tbucket\tdelta\tempty\n";
  for (const Attribute attr : kAttributes)
    for (const Bucket bucket : kBuckets) {
      const int a = static_cast<int>(attr), b = static_cast<int>(bucket);
      out << attribute_name(attr) << '\t' << bucket_name(bucket) << '\t'
          << fmt_metric(delta.delta[a][b]) << '\t' << (delta.empty[a][b] ? 1 : 0)
          << '\n';
    }
  return out.str();
}

std::string delta_json(const HeatmapDelta& delta) {
  nlohmann::json j;
  for (const Attribute attr : kAttributes) {
    nlohmann::json per;
    for (const Bucket bucket : kBuckets) {
      const int a = static_cast<int>(attr), b = static_cast<int>(bucket);
      per[bucket_name(bucket)] = {{"delta", delta.delta[a][b]},
                                  {"empty", delta.empty[a][b]}};
    }
    j[attribute_name(attr)] = per;
  }
  return j.dump(2) + "\n";
}

std::string delta_grid(const HeatmapDelta& delta) {
  std::ostringstream out;
  char buf[32];
  out << "    ";
  for (const Bucket bucket : kBuckets) {
    std::snprintf(buf, sizeof buf, "%9s", bucket_name(bucket));
    out << buf;
  }
  out << '\n';
  for (const Attribute attr : kAttributes) {
    std::snprintf(buf, sizeof buf, "%-4s", attribute_name(attr));
    out << buf;
    for (const Bucket bucket : kBuckets) {
      const int a = static_cast<int>(attr), b = static_cast<int>(bucket);
      if (delta.empty[a][b])
        std::snprintf(buf, sizeof buf, "%9s", ".");
      else
        std::snprintf(buf, sizeof buf, "%+9.4f", delta.delta[a][b]);
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

std::string entity_profile_tsv(const AttributeProfile& profile) {
  std::ostringstream out;
  out << "sentence\tentity\telen\telen_bucket\tecon\tecon_bucket\n";
  for (std::size_t s = 0; s < profile.entities.size(); ++s)
    for (std::size_t j = 0; j < profile.entities[s].size(); ++j) {
      const EntityAttrs& ea = profile.entities[s][j];
      out << s << '\t' << j << '\t' << fmt_value(ea.elen) << '\t'
          << bucket_name(ea.elen_bucket) << '\t' << fmt_value(ea.econ) << '\t'
          << bucket_name(ea.econ_bucket) << '\n';
    }
  return out.str();
}

std::string sentence_profile_tsv(const AttributeProfile& profile) {
  std::ostringstream out;
  out << "sentence\ttlen\ttlen_bucket\teden\teden_bucket\n";
  for (std::size_t s = 0; s < profile.sentences.size(); ++s) {
    const SentenceAttrs& sa = profile.sentences[s];
    out << s << '\t' << fmt_value(sa.tlen) << '\t' << bucket_name(sa.tlen_bucket)
        << '\t' << fmt_value(sa.eden) << '\t' << bucket_name(sa.eden_bucket) << '\n';
  }
  return out.str();
}

}  // namespace blner
