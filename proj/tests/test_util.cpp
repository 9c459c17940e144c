#include <doctest.h>

#include <memoir/util.hpp>

using namespace memoir;

TEST_CASE("trim and snake_case") {
    CHECK(trim("  a b \n") == "a b");
    CHECK(trim("\t\r\n ") == "");
    CHECK(snake_case("Favorite Food!") == "favorite_food");
    CHECK(snake_case("  Diet ") == "diet");
    CHECK(snake_case("a--b") == "a_b");
}

TEST_CASE("token_set lowercases and splits on non-alnum") {
    auto t = token_set("The quick, QUICK fox-trot.");
    CHECK(t == std::set<std::string>{"the", "quick", "fox", "trot"});
}

TEST_CASE("whitespace_token_count") {
    CHECK(whitespace_token_count("") == 0);
    CHECK(whitespace_token_count("one") == 1);
    CHECK(whitespace_token_count("  a  b\nc\t") == 3);
}

TEST_CASE("iso8601 round trip at millisecond precision") {
    std::int64_t ms = 1761822245678;
    auto text = format_iso8601_ms(ms);
    CHECK(text.size() == 24);
    CHECK(text.back() == 'Z');
    auto parsed = parse_iso8601_ms(text);
    REQUIRE(parsed.has_value());
    CHECK(*parsed == ms);

    CHECK(parse_iso8601_ms("2026-01-02T03:04:05Z") ==
          parse_iso8601_ms("2026-01-02T03:04:05.000Z"));
    CHECK_FALSE(parse_iso8601_ms("not a time").has_value());
    CHECK_FALSE(parse_iso8601_ms("2026-01-02T03:04:05+02:00").has_value());
}

TEST_CASE("fnv1a64 is stable") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") != fnv1a64("b"));
    CHECK(fnv1a64("same") == fnv1a64("same"));
}

TEST_CASE("escape_linebreaks") {
    CHECK(escape_linebreaks("a\nb\r\nc") == "a\\nb\\nc");
    CHECK(escape_linebreaks("plain") == "plain");
}
