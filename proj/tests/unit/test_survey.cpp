#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "llmprof/csv.hpp"
#include "llmprof/error.hpp"
#include "llmprof/io.hpp"
#include "llmprof/survey.hpp"
#include "support.hpp"
#include "synth.hpp"

using namespace llmprof;
using namespace testsupport;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kIoError;
}

Codebook small_codebook() { return parse_codebook(read_file(data_dir() / "codebook_small.xml")); }

}  // namespace

TEST_CASE("minimal codebook") {
  const auto cb = parse_codebook(read_file(data_dir() / "codebook_min.xml"));
  REQUIRE(cb.column_count() == 1);
  const auto& q = cb.at("Q1");
  CHECK(q.text == "Do you agree?");
  REQUIRE(q.options.size() == 2);
  CHECK(q.options[0] == OptionLabel{1, "Yes"});
  CHECK(q.options[1] == OptionLabel{2, "No"});
}

TEST_CASE("nested XML and JSON codebooks agree") {
  const auto xml = small_codebook();
  const auto json = parse_codebook(read_file(data_dir() / "codebook_small.json"));
  CHECK(codebook_to_json(xml) == codebook_to_json(json));
  CHECK(xml.column_count() == 7);
  CHECK(xml.at("QRID").free_form);
  CHECK(xml.at("COMMENT").free_form);
  CHECK(xml.at("Q1").options.size() == 3);
  std::vector<std::string> order;
  for (const auto& q : xml.questions()) order.push_back(q.id);
  CHECK(order == std::vector<std::string>{"QRID", "Q1", "Q2", "Q3", "AGE", "GENDER", "COMMENT"});
}

TEST_CASE("codebook JSON round-trip") {
  const auto cb = small_codebook();
  CHECK(codebook_to_json(parse_codebook(codebook_to_json(cb).dump())) == codebook_to_json(cb));
}

TEST_CASE("codebook with a BOM parses") {
  const auto cb = parse_codebook("\xEF\xBB\xBF" + read_file(data_dir() / "codebook_min.xml"));
  CHECK(cb.column_count() == 1);
}

TEST_CASE("codebook errors") {
  CHECK(code_of([] { parse_codebook(""); }) == ErrorCode::kEmptyInput);
  CHECK(code_of([] { parse_codebook("   \n"); }) == ErrorCode::kEmptyInput);
  CHECK(code_of([] { parse_codebook("<codebook><variable id=\"Q1\">"); }) == ErrorCode::kMalformedXml);
  CHECK(code_of([] { parse_codebook("not xml at all"); }) == ErrorCode::kMalformedXml);
  CHECK(code_of([] {
          parse_codebook(R"(<c><variable id="Q1"><value code="1">a</value><value code="2">b</value></variable>
                            <variable id="Q1"><value code="1">a</value><value code="2">b</value></variable></c>)");
        }) == ErrorCode::kDuplicateQuestionId);
  CHECK(code_of([] { parse_codebook(R"(<c><variable id="Q1"><label>x</label></variable></c>)"); }) ==
        ErrorCode::kEmptyOptionSet);
  CHECK(code_of([] {
          parse_codebook(R"(<c><variable id="Q1"><value code="1">a</value></variable></c>)");
        }) == ErrorCode::kEmptyOptionSet);
  CHECK(code_of([] {
          parse_codebook(R"(<c><variable id="Q1"><value code="1">a</value><value code="1">b</value></variable></c>)");
        }) == ErrorCode::kDuplicateOptionCode);
  CHECK(code_of([] { parse_codebook(R"({"variables": [{"id": "", "values": []}]})"); }) ==
        ErrorCode::kMalformedDocument);
}

TEST_CASE("3-row responses with one blank cell") {
  const auto cb = small_codebook();
  const auto m = parse_responses(read_file(data_dir() / "responses_small.csv"), cb);
  CHECK(m.rows() == 3);
  CHECK(m.qrids() == std::vector<std::int64_t>{101, 102, 103});
  // Free-form COMMENT is not stored.
  CHECK(m.columns() == std::vector<std::string>{"Q1", "Q2", "Q3", "AGE", "GENDER"});
  CHECK(m.blank(1, m.require_column("Q2")));
  std::size_t blanks = 0;
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) blanks += m.blank(r, c);
  CHECK(blanks == 1);
  CHECK(m.cell(2, m.require_column("Q1")) == 99);
}

TEST_CASE("blank detection: whitespace and sentinels") {
  const auto cb = small_codebook();
  const std::string csv = "QRID,Q1,Q2,Q3,AGE,GENDER,COMMENT\n1,  ,NA,1,1,1,\n";
  CHECK(code_of([&] { parse_responses(csv, cb); }) == ErrorCode::kUnknownOptionCode);
  const auto m = parse_responses(csv, cb, {"QRID", {"NA"}});
  CHECK(m.blank(0, 0));
  CHECK(m.blank(0, 1));
  CHECK_FALSE(m.blank(0, 2));
}

TEST_CASE("response errors") {
  const auto cb = small_codebook();
  CHECK(code_of([&] { parse_responses("", cb); }) == ErrorCode::kEmptyInput);
  CHECK(code_of([&] { parse_responses("Q1,Q2,Q3,AGE,GENDER,COMMENT\n", cb); }) == ErrorCode::kHeaderMismatch);
  CHECK(code_of([&] { parse_responses("QRID,Q1,Q2,AGE,GENDER,COMMENT\n", cb); }) == ErrorCode::kHeaderMismatch);
  CHECK(code_of([&] { parse_responses("QRID,Q1,Q2,Q3,AGE,GENDER,COMMENT,EXTRA\n", cb); }) ==
        ErrorCode::kHeaderMismatch);
  CHECK(code_of([&] { parse_responses("QRID,Q1,Q2,Q3,AGE,GENDER,COMMENT\n1,1,1,1,1,1,\n1,2,2,2,2,2,\n", cb); }) ==
        ErrorCode::kDuplicateQrid);
  CHECK(code_of([&] { parse_responses("QRID,Q1,Q2,Q3,AGE,GENDER,COMMENT\nx,1,1,1,1,1,\n", cb); }) ==
        ErrorCode::kInvalidQrid);
  CHECK(code_of([&] { parse_responses("QRID,Q1,Q2,Q3,AGE,GENDER,COMMENT\n1,1,1\n", cb); }) ==
        ErrorCode::kMalformedCsv);
}

TEST_CASE("unknown option codes are reported with row, column and code") {
  const auto cb = small_codebook();
  try {
    parse_responses("QRID,Q1,Q2,Q3,AGE,GENDER,COMMENT\n1,1,1,1,1,1,\n2,1,7,1,1,1,\n", cb);
    FAIL("expected UnknownOptionCode");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUnknownOptionCode);
    const std::string msg = e.what();
    CHECK(msg.find("Q2") != std::string::npos);
    CHECK(msg.find("7") != std::string::npos);
    CHECK(msg.find("row 2") != std::string::npos);
  }
}

TEST_CASE("property: write/parse round-trip is cell-for-cell") {
  Rng rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    PlantedSpec spec;
    spec.clusters = 2;
    spec.per_cluster = rng.uniform(1, 30);
    spec.questions = rng.uniform(1, 12);
    spec.options = rng.uniform(2, 7);
    spec.blank_columns = rng.uniform(0, 3);
    spec.demographic_blank = 0.2;
    const auto s = planted_survey(rng, spec);
    const auto text = write_responses(s.matrix);
    CHECK(parse_responses(text, s.codebook) == s.matrix);
  }
}

TEST_CASE("property: corrupt cells always raise UnknownOptionCode") {
  Rng rng(99);
  PlantedSpec spec;
  spec.per_cluster = 5;
  spec.questions = 6;
  const auto s = planted_survey(rng, spec);
  const auto text = write_responses(s.matrix);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t r = rng.index(s.matrix.rows());
    const std::size_t c = rng.index(s.matrix.cols());
    const auto& q = s.codebook.at(s.matrix.columns()[c]);
    std::string bad;
    switch (rng.uniform(0, 3)) {
      case 0: bad = std::to_string(rng.uniform(100, 100000)); break;
      case 1: bad = std::to_string(-rng.uniform(1, 50)); break;
      case 2: bad = "x" + std::to_string(rng.uniform(0, 9)); break;
      default: bad = std::to_string(q.options.back().code + rng.uniform(1, 5)); break;
    }
    // Rebuild the CSV with one replaced cell.
    std::string out;
    csv::Reader reader(text);
    std::vector<std::string> fields;
    std::size_t row = 0;
    bool header = true;
    while (reader.next(fields)) {
      if (!header && row++ == r) fields[c + 1] = bad;
      header = false;
      csv::append_row(out, fields);
    }
    CHECK(code_of([&] { parse_responses(out, s.codebook); }) == ErrorCode::kUnknownOptionCode);
  }
}

TEST_CASE("partition: demographics over a 5-column codebook") {
  Codebook cb({qrid_column(), categorical("AGE", "Age", 3), categorical("GENDER", "Gender", 2),
               categorical("Q1", "q1", 2), categorical("Q2", "q2", 2), categorical("Q3", "q3", 4)});
  PartitionConfig cfg;
  cfg.demographic = {"GENDER", "AGE"};
  const auto p = partition_questions(cb, cfg);
  CHECK(p.survey_ids == std::vector<std::string>{"Q1", "Q2", "Q3"});
  CHECK(p.demographic_ids == std::vector<std::string>{"AGE", "GENDER"});
  CHECK(p.auxiliary_ids == std::vector<std::string>{"QRID"});
}

TEST_CASE("partition: empty config makes every non-QRID column a survey question") {
  const auto cb = small_codebook();
  const auto p = partition_questions(cb, PartitionConfig{});
  CHECK(p.survey_ids == std::vector<std::string>{"Q1", "Q2", "Q3", "AGE", "GENDER"});
  CHECK(p.demographic_ids.empty());
  CHECK(p.auxiliary_ids == std::vector<std::string>{"QRID", "COMMENT"});
}

TEST_CASE("partition errors") {
  const auto cb = small_codebook();
  PartitionConfig unknown;
  unknown.demographic = {"AGE", "NOPE"};
  CHECK(code_of([&] { partition_questions(cb, unknown); }) == ErrorCode::kUnknownColumnInConfig);
  PartitionConfig twice;
  twice.demographic = {"AGE"};
  twice.auxiliary = {"AGE"};
  CHECK(code_of([&] { partition_questions(cb, twice); }) == ErrorCode::kColumnListedTwice);
  PartitionConfig dup;
  dup.demographic = {"AGE", "AGE"};
  CHECK(code_of([&] { partition_questions(cb, dup); }) == ErrorCode::kColumnListedTwice);
}

TEST_CASE("property: partitions are disjoint and cover the codebook") {
  Rng rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<QuestionSpec> qs{qrid_column()};
    const int n = rng.uniform(1, 20);
    for (int i = 0; i < n; ++i) {
      if (rng.chance(0.1)) {
        QuestionSpec f;
        f.id = "F" + std::to_string(i);
        f.free_form = true;
        qs.push_back(f);
      } else {
        qs.push_back(categorical("C" + std::to_string(i), "q", rng.uniform(2, 5)));
      }
    }
    const Codebook cb(qs);
    PartitionConfig cfg;
    for (const auto& q : qs) {
      const int pick = rng.uniform(0, 3);
      if (pick == 0 && !q.free_form) cfg.demographic.push_back(q.id);
      else if (pick == 1) cfg.auxiliary.push_back(q.id);
    }
    const auto p = partition_questions(cb, cfg);
    std::multiset<std::string> all;
    for (const auto* set : {&p.survey_ids, &p.demographic_ids, &p.auxiliary_ids}) all.insert(set->begin(), set->end());
    CHECK(all.size() == cb.column_count());
    for (const auto& q : qs) CHECK(all.count(q.id) == 1);
    for (const auto& id : cfg.demographic) {
      CHECK(std::find(p.demographic_ids.begin(), p.demographic_ids.end(), id) != p.demographic_ids.end());
    }
  }
}

TEST_CASE("drop_blank_columns: single blank among 100 rows") {
  std::vector<std::int64_t> q;
  std::vector<std::int32_t> cells;
  for (int r = 0; r < 100; ++r) {
    q.push_back(r + 1);
    cells.push_back(1);
    cells.push_back(r == 57 ? SurveyMatrix::kBlank : 2);
  }
  const SurveyMatrix m(q, {"FULL", "HOLEY"}, cells);
  CHECK(drop_blank_columns(m, {"FULL", "HOLEY"}) == std::vector<std::string>{"FULL"});
}

TEST_CASE("drop_blank_columns: no blanks keeps every candidate") {
  Rng rng(1);
  PlantedSpec spec;
  spec.per_cluster = 10;
  const auto s = planted_survey(rng, spec);
  CHECK(drop_blank_columns(s.matrix, s.survey_ids) == s.survey_ids);
  CHECK(drop_blank_columns(s.matrix, {}).empty());
}

TEST_CASE("drop_blank_columns: 40 of 120 columns carry blanks") {
  Rng rng(3);
  PlantedSpec spec;
  spec.per_cluster = 40;
  spec.questions = 80;
  spec.blank_columns = 40;
  const auto s = planted_survey(rng, spec);
  // Independent per-column scan.
  std::vector<std::string> expected;
  for (const auto& id : s.survey_ids) {
    const auto c = *s.matrix.column_index(id);
    bool any = false;
    for (std::size_t r = 0; r < s.matrix.rows(); ++r) any = any || s.matrix.raw(r, c) == SurveyMatrix::kBlank;
    if (!any) expected.push_back(id);
  }
  const auto kept = drop_blank_columns(s.matrix, s.survey_ids);
  CHECK(kept.size() == 80);
  CHECK(kept == expected);
}

TEST_CASE("property: drop_blank_columns ignores row and column order") {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    PlantedSpec spec;
    spec.per_cluster = rng.uniform(2, 20);
    spec.questions = rng.uniform(1, 10);
    spec.blank_columns = rng.uniform(0, 6);
    const auto s = planted_survey(rng, spec);
    const auto base = drop_blank_columns(s.matrix, s.survey_ids);

    std::vector<std::size_t> rows(s.matrix.rows()), cols(s.matrix.cols());
    std::iota(rows.begin(), rows.end(), 0);
    std::iota(cols.begin(), cols.end(), 0);
    std::shuffle(rows.begin(), rows.end(), rng.engine);
    std::shuffle(cols.begin(), cols.end(), rng.engine);
    std::vector<std::int64_t> q;
    std::vector<std::string> names;
    std::vector<std::int32_t> cells;
    for (auto c : cols) names.push_back(s.matrix.columns()[c]);
    for (auto r : rows) {
      q.push_back(s.matrix.qrids()[r]);
      for (auto c : cols) cells.push_back(s.matrix.raw(r, c));
    }
    const SurveyMatrix shuffled(q, names, cells);
    auto candidates = s.survey_ids;
    std::shuffle(candidates.begin(), candidates.end(), rng.engine);
    const auto out = drop_blank_columns(shuffled, candidates);
    CHECK(std::set<std::string>(out.begin(), out.end()) == std::set<std::string>(base.begin(), base.end()));
  }
}

TEST_CASE("drop_blank_columns rejects unknown candidates") {
  const auto cb = small_codebook();
  const auto m = parse_responses(read_file(data_dir() / "responses_small.csv"), cb);
  CHECK(drop_blank_columns(m, {"Q1", "Q2", "Q3"}) == std::vector<std::string>{"Q1", "Q3"});
  CHECK(code_of([&] { drop_blank_columns(m, {"COMMENT"}); }) == ErrorCode::kUnknownColumn);
}

TEST_CASE("shipped India partition lists the nine profile variables") {
  const auto doc = nlohmann::json::parse(read_file(data_dir() / "../../configs/india.partition.json"));
  const auto cfg = PartitionConfig::from_json(doc);
  for (const char* id : {"RELIGION", "GENDER", "AGE", "MARITAL", "REGION", "EDUCATION", "CASTE", "DAUGHTERS",
                         "INCOME"}) {
    CHECK(std::find(cfg.demographic.begin(), cfg.demographic.end(), id) != cfg.demographic.end());
  }
  CHECK(cfg.demographic.size() == 9);
}
