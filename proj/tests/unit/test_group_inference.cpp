#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "rankaudit/group_inference.hpp"
#include "support.hpp"

using namespace rankaudit;
using testing::Gen;
using testing::gender;

namespace {

NameFrequencyTable table_from(const std::string& csv) {
  std::istringstream in(csv);
  return load_name_table(in, gender());
}

}  // namespace

TEST_SUITE("group_inference") {

TEST_CASE("case folding trims and lowercases, including non-ASCII") {
  CHECK(fold_name("  Mary\t") == "mary");
  CHECK(fold_name("ÉLODIE") == "élodie");
  CHECK(fold_name("ŁUKASZ") == "łukasz");
  CHECK(fold_name("Ἀθηνᾶ") == fold_name("ἀθηνᾶ"));
  CHECK(fold_name("") == "");
}

TEST_CASE("loading sums duplicate rows and folds names") {
  const auto t = table_from("name,label,count\nmary,F,7065\nMary,M,12\nalex,M,5\nalex,M,3\n");
  REQUIRE(t.find("MARY") != nullptr);
  CHECK(t.find("mary")->at("F") == 7065);
  CHECK(t.find("mary")->at("M") == 12);
  CHECK(t.find("alex")->at("M") == 8);
  CHECK(t.find("nobody") == nullptr);
}

TEST_CASE("zero-count names are treated as absent") {
  const auto t = table_from("name,label,count\nghost,F,0\n");
  CHECK(t.find("ghost") == nullptr);
}

TEST_CASE("malformed tables name the offending line") {
  auto kind_and_message = [](const std::string& csv) -> std::pair<ErrorKind, std::string> {
    try {
      table_from(csv);
    } catch (const Error& e) {
      return {e.kind(), e.what()};
    }
    return {ErrorKind::InvalidArgument, "no error"};
  };
  auto [kind, message] = kind_and_message("name,label,count\nmary,F,1\nbad,F\n");
  CHECK(kind == ErrorKind::MalformedRow);
  CHECK(message.find("line 3") != std::string::npos);

  std::tie(kind, message) = kind_and_message("name,label,count\nmary,F,-4\n");
  CHECK(kind == ErrorKind::MalformedRow);
  std::tie(kind, message) = kind_and_message("name,label,count\nmary,F,1.5\n");
  CHECK(kind == ErrorKind::MalformedRow);
  std::tie(kind, message) = kind_and_message("name,sex,count\n");
  CHECK(kind == ErrorKind::MalformedRow);
  std::tie(kind, message) = kind_and_message("name,label,count\nmary,X,1\n");
  CHECK(kind == ErrorKind::UnknownLabel);
  CHECK(message.find("line 2") != std::string::npos);
}

TEST_CASE("random tables total like an independent grouped sum") {
  Gen gen(5);
  std::ostringstream csv;
  csv << "name,label,count\n";
  std::map<std::string, std::map<std::string, std::uint64_t>> expected;
  for (int i = 0; i < 1000; ++i) {
    const auto name = "n" + std::to_string(gen.index(120));
    const std::string label = gen.chance(0.5) ? "F" : "M";
    const auto count = gen.between(0, 500);
    csv << (gen.chance(0.3) ? " " + name + " " : name) << ',' << label << ',' << count << '\n';
    expected[name][label] += count;
  }
  const auto t = table_from(csv.str());
  for (const auto& [name, counts] : expected) {
    std::uint64_t total = 0;
    for (const auto& [_, c] : counts) total += c;
    const auto* found = t.find(name);
    if (total == 0) {
      CHECK(found == nullptr);
      continue;
    }
    REQUIRE(found != nullptr);
    for (const auto& [label, c] : counts) CHECK(found->at(label) == c);
  }
}

TEST_CASE("majority label with confidence") {
  const std::vector<NameFrequencyTable> chain{table_from("name,label,count\nmary,F,7065\nmary,M,12\n")};
  const auto r = infer_label("Mary", chain, gender());
  CHECK(r.label == "F");
  CHECK(r.confidence == doctest::Approx(7065.0 / 7077.0));
  CHECK(r.provider_index == 0u);

  const auto absent = infer_label("Zed", chain, gender());
  CHECK(absent.label == "unknown");
  CHECK(absent.confidence == 0.0);
  CHECK_FALSE(absent.provider_index.has_value());
}

TEST_CASE("ties resolve to unknown and stop the chain") {
  const std::vector<NameFrequencyTable> chain{table_from("name,label,count\nsam,F,5\nsam,M,5\n"),
                                              table_from("name,label,count\nsam,M,9\n")};
  const auto r = infer_label("Sam", chain, gender());
  CHECK(r.label == "unknown");
  CHECK(r.confidence == 0.0);
  CHECK(r.provider_index == 0u);
}

TEST_CASE("later tables fill gaps without overriding earlier ones") {
  const auto first = table_from("name,label,count\nmary,F,10\njo,M,3\n");
  const auto second = table_from("name,label,count\nmary,M,99\nkim,F,4\n");
  const std::vector<NameFrequencyTable> one{first};
  const std::vector<NameFrequencyTable> two{first, second};
  for (const char* name : {"mary", "jo"}) {
    const auto a = infer_label(name, one, gender());
    const auto b = infer_label(name, two, gender());
    CHECK(a.label == b.label);
    CHECK(a.confidence == b.confidence);
  }
  const auto kim = infer_label(" KIM ", two, gender());
  CHECK(kim.label == "F");
  CHECK(kim.provider_index == 1u);
}

TEST_CASE("two-label confidence is at least one half when resolved") {
  Gen gen(9);
  for (int i = 0; i < 500; ++i) {
    NameFrequencyTable t(gender());
    t.add("x", "F", gen.between(0, 50));
    t.add("x", "M", gen.between(0, 50));
    const std::vector<NameFrequencyTable> chain{t};
    const auto r = infer_label("X", chain, gender());
    if (r.label == "unknown") continue;
    CHECK(r.confidence >= 0.5);
    CHECK(r.confidence <= 1.0);
  }
}

TEST_CASE("label_dataset writes labels and reports coverage") {
  const std::vector<NameFrequencyTable> chain{table_from("name,label,count\nmary,F,10\njohn,M,8\n")};
  auto named = [](const std::string& id, std::optional<std::string> first) {
    CandidateRecord r;
    r.candidate_id = id;
    r.first_name = std::move(first);
    return r;
  };

  const RankingSnapshot all_known("q", 1, {named("a", "Mary"), named("b", "JOHN"), CandidateRecord::anonymized("c")});
  auto out = label_dataset(std::span(&all_known, 1), gender(), chain);
  CHECK(out.coverage.non_missing == 2);
  CHECK(out.coverage.coverage() == 1.0);
  CHECK(out.items[0].entries()[0].group_labels.at("gender") == "F");
  CHECK(out.items[0].entries()[1].group_labels.at("gender") == "M");
  CHECK(out.items[0].entries()[2].group_labels.empty());

  const RankingSnapshot none_known("q", 1, {named("a", "Zed"), named("b", std::nullopt)});
  out = label_dataset(std::span(&none_known, 1), gender(), chain);
  CHECK(out.coverage.coverage() == 0.0);
  CHECK(out.items[0].entries()[0].group_labels.at("gender") == "unknown");

  // Mixed corpus against a set-membership oracle.
  Gen gen(21);
  const std::set<std::string> known{"mary", "john"};
  const char* pool[] = {"Mary", "john", "Zed", "Ann", " MARY "};
  std::vector<CandidateRecord> entries;
  std::size_t visible = 0, hits = 0;
  for (int i = 0; i < 300; ++i) {
    if (gen.chance(0.1)) {
      entries.push_back(CandidateRecord::anonymized("m" + std::to_string(i)));
      continue;
    }
    const std::string name = pool[gen.index(5)];
    entries.push_back(named("c" + std::to_string(i), name));
    ++visible;
    hits += known.contains(fold_name(name));
  }
  const RankingSnapshot mixed("q", 1, entries);
  out = label_dataset(std::span(&mixed, 1), gender(), chain);
  CHECK(out.coverage.non_missing == visible);
  CHECK(out.coverage.resolved == hits);
}

TEST_CASE("full-name keys use first and last name") {
  const GroupScheme race("race", {"nh_white", "other"});
  NameFrequencyTable t(race);
  t.add("ana lee", "other", 3);
  const std::vector<NameFrequencyTable> chain{t};
  CandidateRecord r;
  r.candidate_id = "a";
  r.first_name = "Ana";
  r.last_name = "Lee";
  const RankingSnapshot snap("q", 1, {r});
  const auto out = label_dataset(std::span(&snap, 1), race, chain, NameKey::FullName);
  CHECK(out.items[0].entries()[0].group_labels.at("race") == "other");
}

}  // TEST_SUITE
