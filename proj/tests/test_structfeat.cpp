#include <doctest.h>

#include <algorithm>
#include <set>

#include "degkit/io.hpp"
#include "degkit/structfeat.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace degkit;

TEST_CASE("pair_table examples") {
  PairTable pt = pair_table("(((...)))");
  CHECK(pt.pairs() == std::vector<std::pair<int, int>>{{0, 8}, {1, 7}, {2, 6}});
  PairTable open = pair_table(".........");
  CHECK(open.pairs().empty());
  CHECK(std::all_of(open.partner.begin(), open.partner.end(), [](int p) { return p == PairTable::kUnpaired; }));
  CHECK_THROWS_AS(pair_table("(()"), ValidationError);
  CHECK_THROWS_AS(pair_table("())"), ValidationError);
  CHECK_THROWS_AS(pair_table("((..[[..))..]]"), UnsupportedNotationError);
  CHECK_THROWS_AS(pair_table("(.{.}.)"), UnsupportedNotationError);
  CHECK(to_dot_bracket(pt) == "(((...)))");
}

TEST_CASE("annotate_loops examples") {
  CHECK(annotate_loops(pair_table("((((....))))")) == "SSSSHHHHSSSS");
  CHECK(annotate_loops(pair_table(".((...)).")) == "ESSHHHSSE");
  CHECK(annotate_loops(pair_table("((..))..((..))")) == "SSHHSSXXSSHHSS");
  // bulge, internal loop and multiloop
  CHECK(annotate_loops(pair_table("((.((...))))")) == "SSBSSHHHSSSS");
  CHECK(annotate_loops(pair_table("((.((...)).))")) == "SSISSHHHSSISS");
  CHECK(annotate_loops(pair_table("(.(..).(..).)")) == "SMSHHSMSHHSMS");
  CHECK(annotate_loops(pair_table("....")) == "EEEE");
  CHECK(annotate_loops(pair_table("")) == "");
}

TEST_CASE("annotate_loops agrees with the per-position rule oracle") {
  Rng rng(21);
  for (int trial = 0; trial < 400; ++trial) {
    const int n = 1 + static_cast<int>(uniform_index(rng, 40));
    const PairTable pt = pair_table(fixture::random_structure(n, rng));
    const std::string loops = annotate_loops(pt);
    REQUIRE(loops == oracle::loop_labels_by_rules(pt));
  }
}

TEST_CASE("property: loop label invariants") {
  Rng rng(22);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + static_cast<int>(uniform_index(rng, 50));
    const std::string s = fixture::random_structure(n, rng);
    const PairTable pt = pair_table(s);
    const std::string loops = annotate_loops(pt);
    REQUIRE(static_cast<int>(loops.size()) == n);
    for (int i = 0; i < n; ++i) CHECK((loops[i] == 'S') == pt.paired(i));

    // every maximal unpaired run carries one label
    for (int i = 1; i < n; ++i)
      if (!pt.paired(i) && !pt.paired(i - 1)) CHECK(loops[i] == loops[i - 1]);

    // multiset survives reversal
    std::string rev(s.rbegin(), s.rend());
    for (char& ch : rev) ch = ch == '(' ? ')' : ch == ')' ? '(' : ch;
    std::string a = loops, b = annotate_loops(pair_table(rev));
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
  }
}

TEST_CASE("graph_distances examples") {
  const auto d = graph_distances(pair_table("(((...)))"));
  CHECK(d(0, 8) == 1);
  CHECK(d(1, 8) == 2);
  for (int i = 0; i < 9; ++i) {
    CHECK(d(i, i) == 0);
    if (i + 1 < 9) CHECK(d(i, i + 1) == 1);
  }
  // loop midpoint to the 5' end walks the backbone
  CHECK(d(4, 0) == 4);
  const auto capped = graph_distances(pair_table("........."), 3);
  CHECK(capped(0, 8) == 3);
  CHECK(capped(0, 2) == 2);
}

TEST_CASE("property: graph_distances equals Floyd-Warshall") {
  Rng rng(23);
  for (int trial = 0; trial < 250; ++trial) {
    const int n = 1 + static_cast<int>(uniform_index(rng, 30));
    const PairTable pt = pair_table(fixture::random_structure(n, rng));
    const auto d = graph_distances(pt);
    REQUIRE(d == oracle::floyd_warshall(pt));
    CHECK(d == d.transpose());
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) REQUIRE(d(i, j) <= d(i, k) + d(k, j));
  }
}

TEST_CASE("nearest_pair_distances examples") {
  const auto nd = nearest_pair_distances(pair_table("(((...)))"));
  CHECK(nd.to_paired[4] == 2);
  CHECK(nd.to_unpaired[0] == 3);
  const auto open = nearest_pair_distances(pair_table("........."));
  CHECK(open.to_paired == std::vector<int>(9, 9));
  CHECK(open.to_unpaired == std::vector<int>(9, 0));
  const auto closed = nearest_pair_distances(pair_table("(())"));
  CHECK(closed.to_unpaired == std::vector<int>(4, 4));
}

TEST_CASE("property: nearest distances match a quadratic scan") {
  Rng rng(24);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(uniform_index(rng, 60));
    const PairTable pt = pair_table(fixture::random_structure(n, rng));
    const auto nd = nearest_pair_distances(pt);
    const auto [to_p, to_u] = oracle::nearest_by_scan(pt);
    CHECK(nd.to_paired == to_p);
    CHECK(nd.to_unpaired == to_u);
    for (int i = 0; i < n; ++i) CHECK((nd.to_paired[i] == 0) == pt.paired(i));
  }
}

TEST_CASE("bpp_summary examples") {
  SUBCASE("all zero") {
    const auto s = bpp_summary(BppMatrix{Eigen::MatrixXd::Zero(3, 3)});
    CHECK(s.rowsum.isZero());
    CHECK(s.zeros.isApproxToConstant(1.0));
  }
  SUBCASE("row [0, 0.9, 0.1]") {
    Eigen::MatrixXd p(3, 3);
    p << 0, 0.9, 0.1, 0.9, 0, 0, 0.1, 0, 0;
    const auto s = bpp_summary(BppMatrix{p});
    CHECK(s.rowsum[0] == doctest::Approx(1.0));
    CHECK(s.zeros[0] == 0.0);
  }
  SUBCASE("single off-diagonal 0.5 in 4x4") {
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(4, 4);
    p(0, 2) = p(2, 0) = 0.5;
    const auto s = bpp_summary(BppMatrix{p});
    CHECK(s.rowsum[0] == doctest::Approx(0.5));
    CHECK(s.zeros[0] == doctest::Approx(2.0 / 3.0));
    CHECK(s.zeros[1] == doctest::Approx(1.0));
  }
}

TEST_CASE("inverse distance matrix") {
  const auto inv = inverse_distance_matrix(5);
  CHECK(inv(0, 0) == 0.0);
  CHECK(inv(0, 4) == doctest::Approx(0.25));
  CHECK(inv(3, 1) == doctest::Approx(0.5));
  CHECK(inv == inv.transpose());
  const auto invf = inverse_distance_matrix<float>(3);
  CHECK(invf(0, 2) == doctest::Approx(0.5f));
}

TEST_CASE("compute_features bundles consistent arrays") {
  Rng rng(25);
  Construct c = fixture::make_construct("f", fixture::random_sequence(40, rng), fixture::random_hairpins(40, rng));
  const FeatureBundle f = compute_features(c);
  CHECK(f.loop_string == c.loop_string);
  CHECK(f.dist_to_paired.size() == 40);
  CHECK(f.graph_dist.rows() == 40);
  CHECK(f.inv_dist.isApprox(inverse_distance_matrix(40)));
  CHECK(f.bpp_rowsum.size() == 40);
  c.bpp.reset();
  CHECK_THROWS_AS(compute_features(c), Error);
}

TEST_CASE("reverse_augment examples") {
  Construct c = fixture::make_construct("x", "GGAAACC", "(..)...", 5);
  Profile p;
  p.values = Eigen::VectorXd::LinSpaced(5, 0.0, 4.0);
  p.errors = Eigen::VectorXd::Constant(5, 0.2);
  c.profiles[DataType::kReactivity] = p;
  const Construct r = reverse_augment(c);
  CHECK(r.sequence == "CCAAAGG");
  CHECK(r.structure == "...(..)");
  CHECK(r.loop_string == annotate_loops(pair_table("...(..)")));
  CHECK(r.id == "x_rev");
  CHECK(r.seq_scored == 5);
  CHECK(r.scored_offset == 2);
  // value at absolute position k moves to n-1-k
  CHECK(r.profile(DataType::kReactivity).values[0] == 4.0);
  CHECK(r.profile(DataType::kReactivity).values[4] == 0.0);
  CHECK(r.is_scored(6));
  CHECK(!r.is_scored(1));
  CHECK(r.bpp->p(3, 6) == doctest::Approx(0.9));
  CHECK_NOTHROW(validate(r));

  const Construct rr = reverse_augment(r);
  CHECK(rr.sequence == c.sequence);
  CHECK(rr.structure == c.structure);
  CHECK(rr.scored_offset == 0);
  CHECK(rr.profile(DataType::kReactivity).values == p.values);
  CHECK(rr.bpp->p == c.bpp->p);
}

TEST_CASE("property: reversal is an involution on random constructs") {
  Dataset d = fixture::loop_dataset(30, 25, 17, 26);
  for (const Construct& c : d) {
    const Construct rr = reverse_augment(reverse_augment(c));
    CHECK(rr.sequence == c.sequence);
    CHECK(rr.structure == c.structure);
    CHECK(rr.loop_string == c.loop_string);
    CHECK(rr.seq_scored == c.seq_scored);
    CHECK(rr.scored_offset == c.scored_offset);
    for (const auto& [t, prof] : c.profiles) {
      CHECK(rr.profile(t).values == prof.values);
      CHECK(rr.profile(t).errors == prof.errors);
    }
  }
}
