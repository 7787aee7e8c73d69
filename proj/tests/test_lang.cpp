#include "doctest.h"

#include "bench/bench.hpp"
#include "common/error.hpp"
#include "interp/executable.hpp"
#include "lang/parser.hpp"
#include "oracle/support.hpp"

using namespace retro;
using lang::CommandKind;

namespace {

lang::Program parse(const std::string& text, std::set<std::string> constants = {})
{
    return lang::parse_program(text, constants);
}

std::string parse_failure(const std::string& text)
{
    try {
        parse(text);
    } catch (const ParseError& e) {
        return e.what();
    }
    return {};
}

std::string load_failure(const std::string& text, interp::Constants c)
{
    try {
        interp::load_source(text, c);
    } catch (const Error& e) {
        return e.code();
    }
    return {};
}

} // namespace

TEST_CASE("bounded buffer commands sit on the expected source lines")
{
    const auto p = parse(bench::bounded_buffer_source({10, 20, 30}), {"M", "N"});
    REQUIRE(p.threads.size() == 2);
    CHECK(p.threads[0].name == "Producer");
    CHECK(p.threads[1].name == "Consumer");
    CHECK(p.threads[0].locals.size() == 4);
    CHECK(p.threads[1].locals.size() == 4);
    CHECK(p.globals().size() == 4);

    const std::vector<std::pair<int, CommandKind>> expected = {
        {15, CommandKind::wait},   {16, CommandKind::assign}, {17, CommandKind::assign},
        {18, CommandKind::assign}, {19, CommandKind::assign}, {20, CommandKind::signal},
        {21, CommandKind::assign}, {22, CommandKind::assign}, {31, CommandKind::wait},
        {32, CommandKind::assign}, {33, CommandKind::assign}, {34, CommandKind::assign},
        {35, CommandKind::assign}, {36, CommandKind::signal}, {37, CommandKind::assign},
        {38, CommandKind::assign},
    };
    for (const auto& [line, kind] : expected) {
        INFO("line " << line);
        const auto ids = p.commands_at_line(line);
        REQUIRE(ids.size() == 1);
        CHECK(p.command(ids[0]).kind == kind);
        CHECK(p.command(ids[0]).thread == (line < 25 ? 0 : 1));
    }
    for (int line : {1, 8, 10, 14, 23, 24, 30, 39, 40}) {
        CHECK(p.commands_at_line(line).empty());
    }
}

TEST_CASE("fixture file matches the generated bounded buffer text")
{
    CHECK(oracle::read_fixture("bounded_buffer.mcl") == bench::bounded_buffer_source({10, 20, 30}));
}

TEST_CASE("pretty printing round-trips")
{
    const std::vector<std::string> sources = {
        bench::bounded_buffer_source({1, 2, 3, 4}),
        oracle::read_fixture("straight_line.mcl"),
        oracle::read_fixture("mutex_counter.mcl"),
        oracle::read_fixture("rotate.mcl"),
        oracle::read_fixture("pipeline.mcl"),
    };
    for (const auto& src : sources) {
        const auto p = parse(src, {"M", "N", "K"});
        const auto text = lang::pretty_print(p);
        const auto q = parse(text, {"M", "N", "K"});
        CHECK(lang::structurally_equal(p, q));
        CHECK(lang::pretty_print(q) == text);
    }
}

TEST_CASE("command ids are preorder and stable")
{
    const auto src = oracle::read_fixture("mutex_counter.mcl");
    const auto a = parse(src);
    const auto b = parse(src);
    REQUIRE(a.commands.size() == b.commands.size());
    for (std::size_t i = 0; i < a.commands.size(); ++i) {
        CHECK(a.commands[i].id == static_cast<lang::CommandId>(i));
        CHECK(a.commands[i].line == b.commands[i].line);
        for (auto child : a.commands[i].children) {
            CHECK(child > a.commands[i].id);
            CHECK(a.command(child).parent == a.commands[i].id);
        }
    }
}

TEST_CASE("surface syntax details")
{
    SUBCASE("less-than reads as greater-than with swapped operands")
    {
        const auto p = parse("int x := 0; thread T { while (x < 3) { x := x + 1 } }");
        const auto& w = p.command(p.command(p.threads[0].body).children.at(0));
        REQUIRE(w.kind == CommandKind::while_);
        CHECK(w.guard->op == lang::CmpOp::gt);
        CHECK(lang::render(*w.guard->lhs) == "3");
        CHECK(lang::render(*w.guard->rhs) == "x");
    }
    SUBCASE("semicolons are optional and comments are skipped")
    {
        const auto a = parse("int x := 0; thread T { x := x + 1; x := x * 2; }");
        const auto b = parse("int x := 0; /* c */ thread T { x := x + 1 // c\n x := x * 2 }");
        CHECK(lang::structurally_equal(a, b));
    }
    SUBCASE("the multiplication sign is accepted")
    {
        const auto a = parse("int x := 1; thread T { x := x * 3 }");
        const auto b = parse("int x := 1; thread T { x := x \xC3\x97 3 }");
        CHECK(lang::structurally_equal(a, b));
    }
    SUBCASE("if always has an else arm")
    {
        const auto p = parse("int x := 0; thread T { if (x == 0) { x := 1 } }");
        const auto& c = p.command(p.command(p.threads[0].body).children.at(0));
        REQUIRE(c.kind == CommandKind::if_);
        REQUIRE(c.children.size() == 2);
        CHECK(p.command(c.children[1]).kind == CommandKind::seq);
        CHECK(p.command(c.children[1]).children.empty());
    }
    SUBCASE("precedence is respected in rendering")
    {
        const auto p = parse("int x := 0; thread T { x := (x + 1) * 2 - x / (3 - 1) % 4 }");
        const auto& c = p.command(p.command(p.threads[0].body).children.at(0));
        CHECK(lang::render(*c.value) == "(x + 1) * 2 - x / (3 - 1) % 4");
    }
}

TEST_CASE("parse errors carry positions")
{
    CHECK(parse_failure("int x := 0;").find("thread") != std::string::npos);
    CHECK(parse_failure("int x := 0; thread T { y := 1 }").find("undeclared") != std::string::npos);
    CHECK(parse_failure("int x; int x; thread T { skip }").find("x") != std::string::npos);
    CHECK(!parse_failure("int x; thread T { int x; skip }").empty());
    CHECK(!parse_failure("int x; thread T { skip; int y; }").empty());
    CHECK(!parse_failure("int a[3]; thread T { a := 1 }").empty());
    CHECK(!parse_failure("int x; thread T { x[0] := 1 }").empty());
    CHECK(!parse_failure("int x; thread T { int s; wait(s) }").empty());
    CHECK(!parse_failure("int a[2] := {1, 2, 3}; thread T { skip }").empty());
    CHECK(!parse_failure("int x; thread T { x := (1 }").empty());
    CHECK(!parse_failure("int x; thread T { if (x) { skip } }").empty());
    try {
        parse("int x := 0;\nthread T {\n  x := @;\n}");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.code() == "parse-error");
        CHECK(std::string(e.what()).find("3:") != std::string::npos);
    }
}

TEST_CASE("loading binds constants and lays out cells")
{
    const auto src = bench::bounded_buffer_source({10, 20, 30, 40, 50});
    const auto exe = interp::load_source(src, {{"M", 3}, {"N", 5}});
    // buffer, three global scalars, src and dst, six thread scalars
    CHECK(exe->cell_count() == 3 + 3 + 5 + 5 + 6);
    CHECK(exe->cell_count() == 9 + 3 + 2 * 5);

    const auto& p = exe->program();
    const int consumer = p.thread_index("Consumer");
    CHECK(consumer == 1);
    CHECK(p.thread_index("Nobody") == -1);

    try {
        interp::Executable(std::make_shared<lang::Program>(parse(src, {"M", "N"})), {{"M", 3}});
        FAIL("expected unbound-constant");
    } catch (const Error& e) {
        CHECK(e.code() == "unbound-constant");
    }
    CHECK(load_failure(src, {{"M", 0}, {"N", 5}}) == "bad-constant");
    CHECK(load_failure(src, {{"M", 3}, {"N", 4}}) == "initializer-length");
    CHECK(load_failure("int a[K]; thread T { skip }", {{"K", -2}}) == "bad-constant");
}

TEST_CASE("names are qualified only when ambiguous")
{
    const auto exe = interp::load_source("int g; thread A { int x; x := 1 } thread B { int x; int y; y := 2 }", {});
    std::vector<std::string> names;
    for (std::size_t i = 0; i < exe->cell_count(); ++i) {
        names.push_back(exe->location_name(exe->location_of(i)));
    }
    CHECK(names == std::vector<std::string>{"g", "A.x", "B.x", "y"});
}
