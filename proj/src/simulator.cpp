#include "rankaudit/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <unordered_map>

#include "json.hpp"

#include "rankaudit/errors.hpp"
#include "rankaudit/parallel.hpp"
#include "rankaudit/random.hpp"

namespace rankaudit {

namespace {

struct Member {
  std::string id;
  std::size_t label = 0;
  double score = 0.0;
  bool masked = false;
  std::size_t name = 0;
  int first_day = 1;
};

struct QueryOutput {
  QuerySeries series{"", {}};
  std::vector<TruthCandidate> candidates;
  std::vector<TruthDeparture> departures;
  TruthQuery query;
};

double truncated_normal(CounterRng& rng, const ScoreModel& model) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const double x = model.mean + model.spread * rng.normal();
    if (x >= 0.0 && x <= 1.0) return x;
  }
  return std::clamp(model.mean, 0.0, 1.0);
}

std::string padded(std::size_t value, int width) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%0*zu", width, value);
  return buffer;
}

std::string query_name(const SimConfig& config, std::size_t index) {
  const int width = std::max(4, static_cast<int>(std::to_string(config.n_queries).size()));
  return config.query_prefix + padded(index, width);
}

const ScoreModel& score_model(const SimConfig& config, std::size_t label) {
  static const ScoreModel kDefault{};
  return config.scores.empty() ? kDefault : config.scores[label];
}

double departure_probability(const SimConfig& config, std::size_t label) {
  return config.departure.empty() ? 0.0 : config.departure[label];
}

CandidateRecord observed_record(const SimConfig& config, const Member& m) {
  if (m.masked) return CandidateRecord::anonymized(m.id);
  CandidateRecord record;
  record.candidate_id = m.id;
  const auto& label = config.scheme.label(m.label);
  record.first_name = synthetic_first_name(label, m.name);
  record.last_name = "Surname" + std::to_string(stable_hash(m.id) % 1000);
  record.group_labels[config.scheme.attribute()] = label;
  return record;
}

QueryOutput simulate_query(const SimConfig& config, std::size_t index) {
  CounterRng rng(derive_key(config.seed, index));
  QueryOutput out;
  const auto qid = query_name(config, index);
  const std::size_t m = config.scheme.size();

  std::vector<double> shares = config.shares;
  if (config.share_jitter > 0.0) {
    for (auto& s : shares) s *= std::exp(config.share_jitter * rng.normal());
    const double total = std::accumulate(shares.begin(), shares.end(), 0.0);
    for (auto& s : shares) s /= total;
  }

  std::size_t next_id = 0;
  auto make_member = [&](std::size_t label, int day) {
    Member member;
    member.id = qid + "-" + padded(next_id++, 6);
    member.label = label;
    member.score = truncated_normal(rng, score_model(config, label));
    member.masked = config.missing_probability > 0.0 && rng.bernoulli(config.missing_probability);
    member.name = static_cast<std::size_t>(rng.uniform_int(0, config.names_per_group - 1));
    member.first_day = day;
    out.candidates.push_back({qid, member.id, config.scheme.label(label), member.score, day,
                              member.masked});
    return member;
  };

  const auto n = static_cast<std::size_t>(rng.uniform_int(config.pool_min, config.pool_max));
  std::vector<Member> pool;
  pool.reserve(n);
  for (std::size_t i = 0; i < n; ++i) pool.push_back(make_member(rng.categorical(shares), 1));

  out.query.query_id = qid;
  out.query.target_shares = shares;
  out.query.pool_size = n;
  out.query.day1_counts.assign(m, 0);
  for (const auto& member : pool) ++out.query.day1_counts[member.label];

  std::vector<RankingSnapshot> snapshots;
  for (int day = 1; day <= config.days; ++day) {
    if (day > 1) {
      for (auto& member : pool) {
        if (!rng.bernoulli(departure_probability(config, member.label))) continue;
        out.departures.push_back({qid, member.id, config.scheme.label(member.label), day});
        const std::size_t label = config.replacement == Replacement::SameGroup
                                      ? member.label
                                      : rng.categorical(shares);
        member = make_member(label, day);
      }
    }

    std::vector<double> scores(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
      double s = pool[i].score;
      if (config.daily_score_noise > 0.0 && day > 1) {
        s = std::clamp(s + config.daily_score_noise * rng.normal(), 0.0, 1.0);
      }
      scores[i] = s;
    }

    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    if (config.postprocess == Postprocess::None) {
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return pool[a].id < pool[b].id;
      });
    } else {
      std::vector<ScoredCandidate> scored;
      std::vector<std::size_t> counts(m, 0);
      scored.reserve(pool.size());
      for (std::size_t i = 0; i < pool.size(); ++i) {
        scored.push_back({pool[i].id, config.scheme.label(pool[i].label), scores[i]});
        ++counts[pool[i].label];
      }
      std::vector<double> targets(m);
      for (std::size_t g = 0; g < m; ++g) {
        targets[g] = static_cast<double>(counts[g]) / static_cast<double>(pool.size());
      }
      const GroupProportions proportions(config.scheme, targets, ProportionSource::ObservedPool,
                                         pool.size());
      const auto reranked = detgreedy_rerank(scored, proportions, config.rule);
      std::unordered_map<std::string_view, std::size_t> position;
      for (std::size_t i = 0; i < pool.size(); ++i) position[pool[i].id] = i;
      for (std::size_t r = 0; r < reranked.order.size(); ++r) order[r] = position.at(reranked.order[r]);
    }

    std::vector<CandidateRecord> entries;
    entries.reserve(pool.size());
    for (auto i : order) entries.push_back(observed_record(config, pool[i]));
    snapshots.emplace_back(qid, day, std::move(entries));
  }
  out.series = QuerySeries(qid, std::move(snapshots));
  return out;
}

nlohmann::json shares_json(const std::vector<double>& values) {
  nlohmann::json arr = nlohmann::json::array();
  for (double v : values) arr.push_back(v);
  return arr;
}

}  // namespace

std::uint64_t stable_hash(std::string_view text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void SimConfig::validate() const {
  const auto fail = [](const std::string& message) {
    throw Error(ErrorKind::InvalidConfig, message);
  };
  const std::size_t m = scheme.size();
  if (n_queries == 0) fail("n_queries must be positive");
  if (pool_min == 0 || pool_min > pool_max) fail("pool size range must satisfy 1 <= min <= max");
  if (shares.size() != m) fail("shares must list one value per label");
  double total = 0.0;
  for (double s : shares) {
    if (!(s >= 0.0 && s <= 1.0)) fail("shares must lie in [0,1]");
    total += s;
  }
  if (std::abs(total - 1.0) > 1e-9) fail("shares must sum to 1");
  if (share_jitter < 0.0) fail("share_jitter must be non-negative");
  if (!scores.empty() && scores.size() != m) fail("score models must list one entry per label");
  for (const auto& model : scores) {
    if (!(model.spread > 0.0)) fail("score spread must be positive");
  }
  if (days < 1) fail("days must be >= 1");
  if (!departure.empty() && departure.size() != m) fail("departure must list one value per label");
  for (double p : departure) {
    if (!(p >= 0.0 && p <= 1.0)) fail("departure probabilities must lie in [0,1]");
  }
  if (!(missing_probability >= 0.0 && missing_probability <= 1.0)) {
    fail("missing_probability must lie in [0,1]");
  }
  if (daily_score_noise < 0.0) fail("daily_score_noise must be non-negative");
  if (names_per_group == 0) fail("names_per_group must be positive");
}

SimulatedDataset generate(const SimConfig& config) {
  config.validate();
  std::vector<QueryOutput> outputs(config.n_queries);
  parallel_for(config.n_queries, [&](std::size_t q) { outputs[q] = simulate_query(config, q); });

  SimulatedDataset dataset;
  dataset.series.reserve(outputs.size());
  for (auto& out : outputs) {
    dataset.series.push_back(std::move(out.series));
    dataset.truth.queries.push_back(std::move(out.query));
    std::move(out.candidates.begin(), out.candidates.end(),
              std::back_inserter(dataset.truth.candidates));
    std::move(out.departures.begin(), out.departures.end(),
              std::back_inserter(dataset.truth.departures));
  }
  return dataset;
}

std::string synthetic_first_name(const std::string& label, std::size_t j) {
  return label + "name" + std::to_string(j);
}

NameFrequencyTable synthetic_name_table(const SimConfig& config) {
  NameFrequencyTable table(config.scheme);
  for (std::size_t g = 0; g < config.scheme.size(); ++g) {
    for (std::size_t j = 0; j < config.names_per_group; ++j) {
      const auto name = synthetic_first_name(config.scheme.label(g), j);
      for (std::size_t other = 0; other < config.scheme.size(); ++other) {
        table.add(name, config.scheme.label(other), other == g ? 100 : 1);
      }
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// Bias injection
// ---------------------------------------------------------------------------

BiasedSeries inject_topk_bias(const QuerySeries& series, const GroupScheme& scheme,
                              const std::string& label, double strength, std::uint64_t seed,
                              std::size_t region) {
  if (!(strength >= 0.0 && strength <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "bias strength must lie in [0,1]");
  }
  const auto target = scheme.index_of(label);
  if (!target) {
    throw Error(ErrorKind::UnknownLabel, "label '" + label + "' is not in scheme '" +
                                             scheme.attribute() + "'");
  }

  BiasedSeries out{series, {}};
  if (strength == 0.0) return out;

  std::vector<RankingSnapshot> snapshots;
  for (const auto& [day, snapshot] : series.snapshots()) {
    CounterRng rng(derive_key(seed, stable_hash(series.query_id()), static_cast<std::uint64_t>(day)));
    const auto entries = snapshot.entries();
    std::vector<CandidateRecord> reordered;
    std::vector<CandidateRecord> deferred;
    reordered.reserve(entries.size());
    const std::size_t limit = std::min(region, entries.size());
    std::size_t demoted = 0;
    for (const auto& entry : entries) {
      if (reordered.size() >= limit && !deferred.empty()) {
        std::move(deferred.begin(), deferred.end(), std::back_inserter(reordered));
        deferred.clear();
      }
      const bool member = entry.group_index(scheme) == target;
      if (member && reordered.size() < limit && rng.bernoulli(strength)) {
        deferred.push_back(entry);
        ++demoted;
      } else {
        reordered.push_back(entry);
      }
    }
    std::move(deferred.begin(), deferred.end(), std::back_inserter(reordered));
    out.records.push_back({series.query_id(), day, label, strength, limit, demoted});
    snapshots.emplace_back(snapshot.query_id(), day, std::move(reordered), snapshot.pool_size());
  }
  out.series = QuerySeries(series.query_id(), std::move(snapshots));
  return out;
}

void inject_topk_bias(SimulatedDataset& dataset, const GroupScheme& scheme, const std::string& label,
                      double strength, std::uint64_t seed, std::size_t region) {
  for (auto& series : dataset.series) {
    auto biased = inject_topk_bias(series, scheme, label, strength, seed, region);
    series = std::move(biased.series);
    std::move(biased.records.begin(), biased.records.end(),
              std::back_inserter(dataset.truth.biases));
  }
}

// ---------------------------------------------------------------------------
// Ledger
// ---------------------------------------------------------------------------

void write_ledger(std::ostream& out, const GroundTruth& truth) {
  using nlohmann::ordered_json;
  for (const auto& q : truth.queries) {
    ordered_json row;
    row["type"] = "query";
    row["query_id"] = q.query_id;
    row["target_shares"] = shares_json(q.target_shares);
    row["day1_counts"] = q.day1_counts;
    row["pool_size"] = q.pool_size;
    out << row.dump() << '\n';
  }
  for (const auto& c : truth.candidates) {
    ordered_json row;
    row["type"] = "candidate";
    row["query_id"] = c.query_id;
    row["candidate_id"] = c.candidate_id;
    row["label"] = c.label;
    row["score"] = c.score;
    row["first_day"] = c.first_day;
    row["masked"] = c.masked;
    out << row.dump() << '\n';
  }
  for (const auto& d : truth.departures) {
    ordered_json row;
    row["type"] = "departure";
    row["query_id"] = d.query_id;
    row["candidate_id"] = d.candidate_id;
    row["label"] = d.label;
    row["day"] = d.day;
    out << row.dump() << '\n';
  }
  for (const auto& b : truth.biases) {
    ordered_json row;
    row["type"] = "bias";
    row["query_id"] = b.query_id;
    row["day"] = b.day;
    row["label"] = b.label;
    row["strength"] = b.strength;
    row["region"] = b.region;
    row["demoted"] = b.demoted;
    out << row.dump() << '\n';
  }
}

}  // namespace rankaudit
