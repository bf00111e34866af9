#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "json.hpp"

#include "extprof/errors.hpp"
#include "extprof/io.hpp"

using namespace extprof;

namespace {

OutputRecord sample_record() {
  OutputRecord rec;
  rec.config = {{"command", "profile"}, {"p", "1.5"}};
  rec.columns = {"r", "f"};
  rec.rows = {{Cell{1.0}, Cell{0.5}}, {Cell{2.0}, Cell{0.25}}};
  rec.scalars = {{"a_star", Cell{1.25}}};
  rec.diagnostics = {{"max_residual", 0.25}};
  return rec;
}

}  // namespace

TEST_CASE("doubles round-trip through their printed form") {
  for (double x : {0.1, 1.0 / 3.0, 1e300, 1e-300, -2.5, 0.0, 123456789.123456789}) {
    const std::string text = format_double(x);
    CHECK(std::strtod(text.c_str(), nullptr) == x);
  }
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(-0.0) == "-0");
}

TEST_CASE("csv layout is canonical") {
  const std::string expected =
      "# schema_version = extprof/1\n"
      "# command = profile\n"
      "# p = 1.5\n"
      "# scalar a_star = 1.25\n"
      "# diagnostic max_residual = 0.25\n"
      "r,f\n"
      "1,0.5\n"
      "2,0.25\n";
  CHECK(emit_csv(sample_record()) == expected);
}

TEST_CASE("scalar-only records become a one-row table") {
  OutputRecord rec;
  rec.scalars = {{"a_star", Cell{1.25}}, {"width", Cell{0.5}}};
  const std::string expected =
      "# schema_version = extprof/1\n"
      "a_star,width\n"
      "1.25,0.5\n";
  CHECK(emit_csv(rec) == expected);
}

TEST_CASE("empty tables emit a bare header") {
  OutputRecord rec;
  rec.columns = {"r", "f", "fprime"};
  const std::string text = emit_csv(rec);
  CHECK(text == "# schema_version = extprof/1\nr,f,fprime\n");
  const OutputRecord back = parse_csv(text);
  CHECK(back.columns.size() == 3);
  CHECK(back.rows.empty());
  CHECK(emit_csv(back) == text);
}

TEST_CASE("fields with separators or edge spaces are quoted") {
  OutputRecord rec;
  rec.columns = {"name", "value"};
  rec.rows = {{Cell{std::string("a,b")}, Cell{1.0}},
              {Cell{std::string("say \"hi\"")}, Cell{2.0}},
              {Cell{std::string(" padded ")}, Cell{3.0}}};
  const std::string text = emit_csv(rec);
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);  // schema comment
  std::getline(in, line);  // header
  std::getline(in, line);
  CHECK(line == "\"a,b\",1");
  std::getline(in, line);
  CHECK(line == "\"say \"\"hi\"\"\",2");
  std::getline(in, line);
  CHECK(line == "\" padded \",3");

  const OutputRecord back = parse_csv(text);
  REQUIRE(back.rows.size() == 3);
  CHECK(std::get<std::string>(back.rows[0][0]) == "a,b");
  CHECK(std::get<std::string>(back.rows[1][0]) == "say \"hi\"");
  CHECK(std::get<std::string>(back.rows[2][0]) == " padded ");
}

TEST_CASE("re-emitting a parsed file reproduces it byte for byte") {
  OutputRecord quoted;
  quoted.config = {{"command", "sweep"}};
  quoted.columns = {"a", "status"};
  quoted.rows = {{Cell{0.5}, Cell{std::string("ok")}},
                 {Cell{1.5}, Cell{std::string("needs, quoting")}}};
  quoted.diagnostics = {{"points", 2.0}};

  OutputRecord scalars;
  scalars.config = {{"command", "threshold"}, {"p", "1.5"}};
  scalars.scalars = {{"a_star", Cell{1.4}}, {"width", Cell{1e-10}}};

  OutputRecord one_row;
  one_row.columns = {"x", "u"};
  one_row.rows = {{Cell{0.0}, Cell{0.25}}};

  for (const OutputRecord& rec : {sample_record(), quoted, scalars, one_row}) {
    const std::string text = emit_csv(rec);
    CHECK(emit_csv(parse_csv(text)) == text);
  }
}

TEST_CASE("json output is valid and hoists scalars") {
  const std::string text = emit_json(sample_record());
  const nlohmann::json j = nlohmann::json::parse(text);
  CHECK(j["schema_version"] == "extprof/1");
  CHECK(j["config"]["command"] == "profile");
  CHECK(j["config"]["p"] == "1.5");
  CHECK(j["a_star"] == 1.25);
  CHECK(j["columns"].size() == 2);
  CHECK(j["rows"].size() == 2);
  CHECK(j["rows"][0][0] == 1.0);
  CHECK(j["rows"][1][1] == 0.25);
  CHECK(j["diagnostics"]["max_residual"] == 0.25);
}

TEST_CASE("json escapes control and quote characters") {
  OutputRecord rec;
  rec.scalars = {{"note", Cell{std::string("say \"hi\"\tnow\\end")}}};
  const nlohmann::json j = nlohmann::json::parse(emit_json(rec));
  CHECK(j["note"] == "say \"hi\"\tnow\\end");
}

TEST_CASE("json of an empty table keeps the columns") {
  OutputRecord rec;
  rec.columns = {"r", "f"};
  const nlohmann::json j = nlohmann::json::parse(emit_json(rec));
  CHECK(j["columns"].size() == 2);
  CHECK(j["rows"].empty());
}

TEST_CASE("non-finite payloads abort emission") {
  OutputRecord rec = sample_record();
  rec.rows[0][1] = Cell{std::nan("")};
  try {
    emit_csv(rec);
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(e.code() == Errc::non_finite_payload);
  }
  OutputRecord inf = sample_record();
  inf.diagnostics[0].second = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(emit_json(inf), SolverError);
}

TEST_CASE("malformed csv input is rejected") {
  CHECK_THROWS_AS(parse_csv("r,f\n1,2\n"), SolverError);                      // no schema line
  CHECK_THROWS_AS(parse_csv("# schema_version = extprof/1\n# garbage\n"), SolverError);
  CHECK_THROWS_AS(
      parse_csv("# schema_version = extprof/1\n# diagnostic d = oops\nr\n1\n"), SolverError);
}

TEST_CASE("text files are written and re-read intact") {
  namespace fs = std::filesystem;
  const fs::path path = fs::temp_directory_path() / "extprof_io_test.csv";
  const std::string text = emit_csv(sample_record());
  write_text_file(path.string(), text);
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  CHECK(buf.str() == text);
  fs::remove(path);

  try {
    write_text_file("/nonexistent_dir_54321/out.csv", text);
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(e.code() == Errc::io_failure);
  }
}
