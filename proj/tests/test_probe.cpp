#include "jjcircuit/presets.hpp"
#include "jjcircuit/probe.hpp"
#include "jjcircuit/synthetic.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace jjcircuit;
using namespace jjcircuit::probe;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("Ambegaokar-Baratoff critical current", "[probe]") {
    CHECK(ab_critical_current(1564.0) == 0.5 * ab_critical_current(782.0));
    // pi Delta / 2e = 2.827e-4 V for Delta = 180 ueV.
    CHECK_THAT(M_PI * 180e-6 / 2.0, WithinRel(2.827e-4, 1e-3));
    CHECK_THAT(ab_critical_current(782.0, 180e-6), WithinRel(3.62e-7, 2e-3));
    CHECK_THAT(ab_normal_resistance(ab_critical_current(782.0)), WithinRel(782.0, 1e-14));
    CHECK_THROWS_AS(ab_critical_current(0.0), input_error);
    CHECK_THROWS_AS(ab_critical_current(782.0, 0.0), input_error);
}

TEST_CASE("junction inductance from critical current", "[probe]") {
    const double phi0 = 6.62607015e-34 / (2.0 * 1.602176634e-19);
    CHECK_THAT(junction_inductance(phi0 / (2.0 * M_PI * 1e-9)), WithinRel(1e-9, 1e-14));
    CHECK_THAT(junction_inductance(3.617e-7), WithinRel(0.910e-9, 1e-3));
    CHECK_THAT(junction_inductance(2.993e-7), WithinRel(1.10e-9, 1e-3));
    CHECK_THAT(critical_current_for_inductance(junction_inductance(3e-7)), WithinRel(3e-7, 1e-14));
    CHECK_THROWS_AS(junction_inductance(-1.0), input_error);
}

TEST_CASE("resistance to inductance chain round trips", "[probe]") {
    for (double l_j : {0.91e-9, 1.10e-9}) {
        const double r_n = ab_normal_resistance(critical_current_for_inductance(l_j));
        CHECK_THAT(junction_inductance(ab_critical_current(r_n)), WithinRel(l_j, 1e-12));
    }
    // The on-substrate resistance rounds to the quoted 782 ohm.
    CHECK(std::round(ab_normal_resistance(critical_current_for_inductance(0.91e-9))) == 782.0);
}

TEST_CASE("parallel resistance model", "[probe]") {
    CHECK_THAT(parallel_model(300, 782.0, 1e15), WithinRel(300 * 782.0, 1e-6));
    CHECK_THAT(parallel_model(500, 782.0, 670e3) / 1e3, WithinAbs(246.9, 0.05));
    CHECK_THAT(parallel_model(500, 905.0, 1000e3) / 1e3, WithinAbs(311.5, 0.05));
    CHECK_THROWS_AS(parallel_model(0, 782.0, 670e3), input_error);
}

TEST_CASE("probe statistics", "[probe]") {
    const auto c = probe_stats({5.0, 5.0, 5.0});
    CHECK(c.std_dev == 0.0);
    CHECK(c.cv == 0.0);
    const auto two = probe_stats({1.0, 3.0});
    CHECK(two.mean == 2.0);
    CHECK_THAT(two.std_dev, WithinRel(std::sqrt(2.0), 1e-15));
    CHECK(std::round(6.4 / 55.3 * 100.0) / 100.0 == 0.12);
    CHECK_THROWS_AS(probe_stats({}), input_error);
}

TEST_CASE("probe fit recovers noise-free generators", "[probe]") {
    for (double r_sub : {presets::probe_r_sub_substrate_ohm, presets::probe_r_sub_etched_ohm}) {
        synthetic::ProbeOptions opt;
        opt.r_substrate = r_sub;
        opt.relative_noise = 0.0;
        opt.replicates = 1;
        const auto fit = fit_probe(synthetic::probe_dataset(opt, 0));
        CHECK_THAT(fit.r_junction, WithinRel(782.0, 1e-3));
        CHECK_THAT(fit.r_substrate, WithinRel(r_sub, 1e-3));
    }
}

TEST_CASE("probe fit with 2% noise and 32 replicates", "[probe]") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto fit = fit_probe(synthetic::probe_dataset({}, seed));
        CHECK_THAT(fit.r_junction, WithinRel(782.0, 0.05));
        CHECK_THAT(fit.r_substrate, WithinRel(670e3, 0.05));
        CHECK(fit.reduced_chi2 > 0.5);
        CHECK(fit.reduced_chi2 < 2.0);
        CHECK(fit.covariance(0, 0) > 0.0);
        CHECK(fit.covariance(1, 1) > 0.0);
    }
}

TEST_CASE("probe fit grouping and degenerate data", "[probe]") {
    const auto ds = group_by_count({{200, 1.0}, {100, 2.0}, {200, 3.0}});
    REQUIRE(ds.records.size() == 2);
    CHECK(ds.records[0].n_junctions == 100);
    CHECK(ds.records[1].resistances.size() == 2);

    ProbeDataset single{{{300, {2.1e5, 2.2e5, 2.0e5}}}};
    CHECK_THROWS_AS(fit_probe(single), numerical_error);
    CHECK_THROWS_WITH(fit_probe(single), ContainsSubstring("singular"));
    ProbeDataset negative{{{100, {-1.0}}, {200, {1.0}}}};
    CHECK_THROWS_AS(fit_probe(negative), input_error);
}
