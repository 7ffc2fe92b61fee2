#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "bifurc/errors.hpp"
#include "bifurc/rng.hpp"
#include "bifurc/word.hpp"

using namespace bifurc;

TEST_CASE("uniform symmetric measure") {
    StepMeasure mu = uniform_symmetric(2);
    REQUIRE(mu.atoms().size() == 4);
    double total = 0.0;
    for (auto& [w, p] : mu.atoms()) {
        CHECK(p == 0.25);
        total += p;
    }
    CHECK(total == 1.0);
    CHECK(mu.is_symmetric());

    StepMeasure single = uniform_symmetric(1);
    REQUIRE(single.atoms().size() == 2);
    CHECK(single.atoms()[0].second == 0.5);
    CHECK(single.is_symmetric());
}

TEST_CASE("reversed measure swaps inverse weights") {
    StepMeasure mu({{Word{{1}}, 0.75}, {Word{{-1}}, 0.25}});
    CHECK_FALSE(mu.is_symmetric());
    StepMeasure rev = mu.reversed();
    std::map<Word, double> weights;
    for (auto& [w, p] : rev.atoms()) weights[w] = p;
    CHECK(weights[Word{{-1}}] == 0.75);
    CHECK(weights[Word{{1}}] == 0.25);

    // reversal is an involution
    StepMeasure twice = rev.reversed();
    std::map<Word, double> back;
    for (auto& [w, p] : twice.atoms()) back[w] = p;
    CHECK(back[Word{{1}}] == 0.75);

    // a symmetric measure has the same atoms after reversal
    StepMeasure sym = uniform_symmetric(2);
    StepMeasure sym_rev = sym.reversed();
    std::map<Word, double> sa, sb;
    for (auto& [w, p] : sym.atoms()) sa[w] = p;
    for (auto& [w, p] : sym_rev.atoms()) sb[w] = p;
    CHECK(sa == sb);
}

TEST_CASE("weights must be positive and sum to one") {
    CHECK_THROWS_AS(StepMeasure({{Word{{1}}, 0.8}}), Error);
    CHECK_THROWS_AS(StepMeasure({{Word{{1}}, 0.5}, {Word{{-1}}, -0.5}}), Error);
    // duplicates merge
    StepMeasure merged({{Word{{1}}, 0.5}, {Word{{1}}, 0.25}, {Word{{-1}}, 0.25}});
    CHECK(merged.atoms().size() == 2);
}

TEST_CASE("sampling is deterministic and length-exact") {
    StepMeasure mu = uniform_symmetric(2);
    SplitMix64 a = derive_stream(42, {stream::kTrialWord, 7});
    SplitMix64 b = derive_stream(42, {stream::kTrialWord, 7});
    Word w1 = mu.sample_word(5, a);
    Word w2 = mu.sample_word(5, b);
    CHECK(w1 == w2);
    CHECK(w1.length() == 5);

    SplitMix64 c = derive_stream(42, {stream::kTrialWord, 8});
    CHECK(mu.sample_word(5, c).length() == 5);

    SplitMix64 z(1);
    CHECK(mu.sample_word(0, z).empty());
}

TEST_CASE("concatenation lengths add, inverse reverses") {
    Word u{{1, -2, 1}};
    Word v{{2, 2}};
    CHECK(u.concat(v).length() == 5);
    Word inv = u.inverse();
    CHECK(inv == Word{{-1, 2, -1}});
    CHECK(u.inverse().inverse() == u);
}

TEST_CASE("empirical frequency of a biased coin at 1e5 draws") {
    StepMeasure mu({{Word{{1}}, 0.75}, {Word{{-1}}, 0.25}});
    SplitMix64 rng = derive_stream(2024, {stream::kTrialWord, 0});
    std::size_t n = 100000, hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
        Word w = mu.sample_word(1, rng);
        if (w.letters[0] == 1) ++hits;
    }
    double freq = static_cast<double>(hits) / static_cast<double>(n);
    // binomial oracle: 3 sigma = 3 sqrt(p q / n) = 0.0041 < 0.005
    CHECK(std::abs(freq - 0.75) <= 0.005);
}

TEST_CASE("chi-square over 1e6 draws stays under the 0.99 quantile") {
    StepMeasure mu = uniform_symmetric(2);
    SplitMix64 rng = derive_stream(99, {stream::kTrialWord, 0});
    std::size_t n = 1000000;
    std::map<Word, std::size_t> counts;
    for (std::size_t i = 0; i < n; ++i) ++counts[mu.sample_word(1, rng)];
    double chi2 = 0.0;
    double expected = static_cast<double>(n) / 4.0;
    for (auto& [w, c] : counts) {
        double d = static_cast<double>(c) - expected;
        chi2 += d * d / expected;
    }
    // df = 3, 0.99 quantile = 11.345
    CHECK(chi2 < 11.345);
}

TEST_CASE("word token format and parse round trip") {
    std::vector<std::string> names = {"a", "b"};
    Word w{{1, -2, 2, -1}};
    std::string text = format_word(w, names);
    CHECK(text == "a B b A");
    CHECK(parse_word(text, names) == w);
    CHECK_THROWS_AS(parse_word("a c", names), Error);
}

TEST_CASE("independent streams differ") {
    StepMeasure mu = uniform_symmetric(2);
    SplitMix64 a = derive_stream(7, {stream::kTrialWord, 0});
    SplitMix64 b = derive_stream(7, {stream::kTrialWord, 1});
    CHECK(mu.sample_word(32, a) != mu.sample_word(32, b));
}
