#include <doctest.h>

#include <sstream>

#include "irtkit/csv.hpp"
#include "irtkit/curves.hpp"
#include "irtkit/error.hpp"
#include "irtkit/fixtures.hpp"
#include "irtkit/io.hpp"
#include "irtkit/manifest.hpp"
#include "irtkit/quadrature.hpp"
#include "irtkit/response_matrix.hpp"
#include "support.hpp"

using namespace irtkit;

TEST_CASE("csv: quoting, embedded separators and line numbers") {
    const auto t = csv::parse("a,b\n\"x, y\",\"he said \"\"hi\"\"\"\n\n1,\"multi\nline\"\n3,4\n", "t.csv");
    REQUIRE(t.rows.size() == 3);
    CHECK(t.rows[0].fields[0] == "x, y");
    CHECK(t.rows[0].fields[1] == "he said \"hi\"");
    CHECK(t.rows[1].fields[1] == "multi\nline");
    CHECK(t.rows[1].line == 4);
    CHECK(t.rows[2].line == 6);
}

TEST_CASE("csv: byte-order mark and CRLF are tolerated") {
    const auto t = csv::parse("\xEF\xBB\xBFitem_id,b\r\nx,1\r\n", "bom.csv");
    CHECK(t.header[0] == "item_id");
    CHECK(t.rows[0].fields[1] == "1");
}

TEST_CASE("csv: malformed input reports the line") {
    try {
        csv::parse("a,b\n1,2\n3\n", "bad.csv");
        FAIL("expected an error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("bad.csv:3") != std::string::npos);
    }
    CHECK_THROWS_AS(csv::parse("a,b\n\"open,2\n", "q.csv"), ValidationError);
    CHECK_THROWS_AS(csv::parse("", "empty.csv"), ValidationError);
}

TEST_CASE("csv: quote and format_double round-trip") {
    CHECK(csv::quote("plain") == "plain");
    CHECK(csv::quote("a,b") == "\"a,b\"");
    CHECK(csv::quote("say \"x\"") == "\"say \"\"x\"\"\"");
    for (double v : {0.1, -2.74, 1.0 / 3.0, 6.02214076e23, 5e-324}) {
        CHECK(csv::parse_double(csv::format_double(v), 1, "x") == v);
    }
    CHECK_THROWS_AS(csv::parse_double("1.5x", 2, "f"), ValidationError);
    CHECK_THROWS_AS(csv::parse_double("nan", 2, "f"), ValidationError);
    CHECK_THROWS_AS(csv::parse_integer("2.5", 2, "f"), ValidationError);
}

TEST_CASE("quadrature: standard grid invariants and validation") {
    const auto g = QuadratureGrid::standard_normal();
    CHECK(g.size() == 41);
    CHECK(g.nodes().front() == -4.0);
    CHECK(g.nodes().back() == 4.0);
    double sum = 0.0, mean = 0.0, var = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        sum += g.weights()[k];
        mean += g.weights()[k] * g.nodes()[k];
        var += g.weights()[k] * g.nodes()[k] * g.nodes()[k];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(mean) < 1e-14);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-3));
    CHECK_THROWS_AS(QuadratureGrid({0.0, 0.0}, {0.5, 0.5}), ValidationError);
    CHECK_THROWS_AS(QuadratureGrid({0.0, 1.0}, {0.5, 0.6}), ValidationError);
    CHECK_THROWS_AS(QuadratureGrid({0.0, 1.0}, {1.0, 0.0}), ValidationError);
}

TEST_CASE("response matrix: long and wide formats agree") {
    const std::string long_text = "respondent_id,item_id,response\nr1,i1,1\nr1,i2,0\nr2,i2,1\n";
    const std::string wide_text = "respondent_id,i1,i2\nr1,1,0\nr2,,1\n";
    const auto a = ResponseMatrix::parse_long_csv(long_text, "l.csv");
    const auto b = ResponseMatrix::parse_wide_csv(wide_text, "w.csv");
    CHECK(a == b);
    CHECK(a.at(1, 0) == ResponseMatrix::kMissing);

    std::ostringstream l, w;
    a.write_long_csv(l);
    a.write_wide_csv(w);
    CHECK(l.str() == long_text);
    CHECK(w.str() == wide_text);
}

TEST_CASE("response matrix: input errors") {
    CHECK_THROWS_AS(ResponseMatrix::parse_long_csv("respondent_id,item_id,response\nr1,i1,2\n", "x"), ValidationError);
    CHECK_THROWS_AS(ResponseMatrix::parse_long_csv("respondent_id,item_id,response\nr1,i1,1\nr1,i1,0\n", "x"),
                    ValidationError);
    CHECK_THROWS_AS(ResponseMatrix::parse_long_csv("who,item_id,response\nr1,i1,1\n", "x"), ValidationError);
    CHECK_THROWS_AS(ResponseMatrix::parse_wide_csv("respondent_id,i1\nr1,x\n", "x"), ValidationError);
    CHECK_THROWS_AS(ResponseMatrix({"r", "r"}, {"i"}), ValidationError);
    CHECK_THROWS_AS(ResponseMatrix::read_long_csv("/nonexistent/file.csv"), ValidationError);
}

TEST_CASE("response matrix: calibration validation lists degenerate items") {
    const auto m = ResponseMatrix::parse_long_csv(
        "respondent_id,item_id,response\nr1,i1,1\nr2,i1,1\nr1,i2,0\nr2,i2,1\nr1,i3,0\nr2,i3,0\n", "d.csv");
    try {
        m.validate_for_calibration();
        FAIL("expected DegenerateItemsError");
    } catch (const DegenerateItemsError& e) {
        CHECK(e.item_ids() == std::vector<std::string>{"i1", "i3"});
    }
    const auto tiny = ResponseMatrix::parse_long_csv("respondent_id,item_id,response\nr1,i1,1\nr2,i1,0\n", "t.csv");
    CHECK_THROWS_AS(tiny.validate_for_calibration(), ValidationError);
}

TEST_CASE("params JSON round-trips bit-exactly and rejects bad entries") {
    const std::vector<NamedItem> items{{"x", {1.0 / 3.0, -2.74, 0.1}}, {"y", {2.5, 0.1 + 0.2, 0.0}}};
    const auto back = parse_params_json(to_json_text(items), "p.json");
    REQUIRE(back.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(back[i].item_id == items[i].item_id);
        CHECK(back[i].params == items[i].params);
    }
    CHECK_THROWS_AS(parse_params_json("{", "p"), ValidationError);
    CHECK_THROWS_AS(parse_params_json("{}", "p"), ValidationError);
    CHECK_THROWS_AS(parse_params_json(R"([{"item_id":"x","a":1,"b":0}])", "p"), ValidationError);
    CHECK_THROWS_AS(parse_params_json(R"([{"item_id":"x","a":-1,"b":0,"c":0}])", "p"), ValidationError);
    CHECK_THROWS_AS(parse_params_json(R"([{"item_id":"x","a":1,"b":0,"c":0},{"item_id":"x","a":1,"b":0,"c":0}])", "p"),
                    ValidationError);
}

TEST_CASE("difficulty table round-trip") {
    const std::vector<ItemDifficulty> rows{{"a", -2.74}, {"b, quoted", 1.0 / 7.0}};
    std::ostringstream out;
    write_difficulties_csv(out, rows);
    const auto back = parse_difficulties_csv(out.str(), "b.csv");
    REQUIRE(back.size() == 2);
    CHECK(back[1].item_id == "b, quoted");
    CHECK(back[1].b == rows[1].b);
    CHECK_THROWS_AS(parse_difficulties_csv("item_id,b\na,1\na,2\n", "dup.csv"), ValidationError);
}

TEST_CASE("example-item tables carry the published difficulties") {
    const auto nli = read_nli_fixture(support::fixture("nli_items.csv"));
    REQUIRE(nli.size() == 4);
    CHECK(nli[0].text == "A little girl eating a sucker / A child eating candy");
    CHECK(nli[0].gold_label == "entailment");
    CHECK(nli[0].b == -2.74);

    const auto sa = read_sa_fixture(support::fixture("sa_items.csv"));
    REQUIRE(sa.size() == 4);
    CHECK(sa[0].text == "The stupidest, most insulting movie of 2002's first quarter.");
    CHECK(sa[0].b == -2.46);

    // Writing and re-reading the difficulty projection is lossless.
    const auto d = fixture_difficulties(sa);
    std::ostringstream out;
    write_difficulties_csv(out, d);
    const auto back = parse_difficulties_csv(out.str(), "sa_b.csv");
    CHECK(back[0].item_id == "sstb-01");
    CHECK(back[0].b == -2.46);
    CHECK(back[3].b == 2.05);
}

TEST_CASE("learning-curve CSV round-trip and validation") {
    LearningCurveTable t;
    t.rows = {{"m1", 100, "i1", 1, 0}, {"m2", 500000, "i2", 0, 0}, {"m1", 100, "i2", 0, 0}};
    std::ostringstream out;
    t.write_csv(out);
    CHECK(out.str() == "model_name,training_size,item_id,correct\nm1,100,i1,1\nm2,500000,i2,0\nm1,100,i2,0\n");
    const auto back = LearningCurveTable::parse_csv(out.str(), "c.csv");
    REQUIRE(back.rows.size() == 3);
    CHECK(back.rows[1].training_size == 500000);
    CHECK(back.model_names() == std::vector<std::string>{"m1", "m2"});
    CHECK_THROWS_AS(LearningCurveTable::parse_csv("model_name,training_size,item_id,correct\nm,0,i,1\n", "c"),
                    ValidationError);
    CHECK_THROWS_AS(LearningCurveTable::parse_csv("model_name,training_size,item_id,correct\nm,10,i,2\n", "c"),
                    ValidationError);
}

TEST_CASE("sha256 of known strings") {
    CHECK(sha256_text("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_text("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("manifest JSON round-trip") {
    RunManifest m;
    m.subcommand = "simulate population";
    m.config["n"] = "2000";
    m.config["wide"] = false;
    m.inputs["items"] = {"/abs/items.json", "00ff"};
    m.outputs["out"] = "/abs/m.csv";
    m.tool_version = "0.1.0";
    m.seed = 7;
    const auto back = RunManifest::parse(m.to_json_text(), "m.json");
    CHECK(back.to_json_text() == m.to_json_text());
    CHECK(back.inputs.at("items").sha256 == "00ff");
    CHECK_THROWS_AS(RunManifest::parse("{\"subcommand\": 1}", "m.json"), ValidationError);
}
