// test_evolution.cpp — budget checks, grid/archive/island mechanics, evolve loop.
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <set>

#include "evobt/evolution.hpp"
#include "helpers.hpp"

using namespace evobt;
using namespace evobt::test;

namespace {

ParamSpace two_dim_space() {
    return ParamSpace{{
        {"A", 0.0, 10.0, Scale::linear},
        {"B", 1e-3, 1e1, Scale::log10},
    }};
}

Genome mid_genome() { return Genome{{"A", 5.0}, {"B", 0.1}}; }

// Cheap smooth objective peaking inside the box, away from the seed.
Evaluator toy_evaluator(bool with_oos = true) {
    return [with_oos](const Genome& g) -> EvalResult {
        const double a = g.at("A");
        const double b = std::log10(g.at("B"));
        const double f = -(a - 8.0) * (a - 8.0) - (b - 0.5) * (b - 0.5);
        EvalResult r;
        r.fitness = f;
        if (with_oos) r.oos_fitness = f - 1.0;
        return r;
    };
}

}  // namespace

TEST_CASE("check_budget counts genome keys against the cap") {
    Genome g;
    for (int i = 0; i < 18; ++i) g["K" + std::to_string(i)] = 1.0;
    auto r = check_budget(g);
    CHECK(r.ok);
    CHECK(r.count == 18);
    g["K18"] = 1.0;
    r = check_budget(g);
    CHECK_FALSE(r.ok);
    CHECK(r.count == 19);
    CHECK(check_budget(g, 19).ok);
    CHECK(check_budget(Genome{}).count == 0);
}

TEST_CASE("check_budget_text counts module-level constant assignments") {
    const std::string text =
        "SIZING_FACTOR = 10000\n"
        "Q_MAX=200000\n"
        "FOO_2 = 3\n"
        "  INDENTED = 1\n"       // not module level
        "lower_case = 1\n"       // not a constant
        "FLAG == 3\n"            // comparison, not assignment
        "THRESH >= 2\n"          // comparison
        "IF SOMETHING:\n"        // no assignment
        "X = A == B\n";          // assignment whose value is a comparison
    const auto r = check_budget_text(text);
    CHECK(r.count == 4);  // SIZING_FACTOR, Q_MAX, FOO_2, X
    CHECK(r.ok);

    std::string big;
    for (int i = 0; i < 19; ++i) big += "C" + std::to_string(i) + " = 0\n";
    const auto b = check_budget_text(big);
    CHECK(b.count == 19);
    CHECK_FALSE(b.ok);
    CHECK(check_budget_text("").count == 0);
    CHECK(check_budget_text("no constants here\n").count == 0);
}

TEST_CASE("budget haircut never flatters a violation") {
    CHECK(apply_budget_haircut(100.0, 0.5) == 50.0);
    CHECK(apply_budget_haircut(-100.0, 0.5) == -150.0);
    CHECK(apply_budget_haircut(0.0, 0.5) == 0.0);
    CHECK(apply_budget_haircut(40.0, 1.0) == 40.0);
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> fd(-1e4, 1e4), hd(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const double f = fd(rng);
        CHECK(apply_budget_haircut(f, hd(rng)) <= f);
    }
}

TEST_CASE("grid binning respects ranges and adapts the score axis") {
    MapElitesGrid grid(8, 36.0);
    auto c0 = grid.bin_of(0, 0.0, 5.0);
    // First fitness defines a degenerate range: score bin 0.
    CHECK(c0 == std::array<int, 3>{0, 0, 0});
    // Widening the range re-bins later offers, never earlier ones.
    auto c1 = grid.bin_of(36, 1.0, 10.0);
    CHECK(c1[0] == 7);  // complexity at/above the ceiling clamps to the top bin
    CHECK(c1[1] == 7);  // diversity 1.0 clamps likewise
    CHECK(c1[2] == 7);  // new maximum fitness
    auto c2 = grid.bin_of(18, 0.5, 7.5);
    CHECK(c2 == std::array<int, 3>{4, 4, 4});
    auto c3 = grid.bin_of(9, 0.25, 5.0);
    CHECK(c3 == std::array<int, 3>{2, 2, 0});  // old minimum is now the floor
    // Out-of-range descriptors clamp instead of escaping the grid.
    auto c4 = grid.bin_of(500, -0.5, 12.0);
    CHECK(c4[0] == 7);
    CHECK(c4[1] == 0);
    CHECK(c4[2] == 7);
}

TEST_CASE("grid keeps the strictly better occupant") {
    MapElitesGrid grid(4, 8.0);
    auto r0 = grid.offer(0, 2, 0.3, 1.0);
    CHECK(r0.grid_inserted);
    CHECK_FALSE(r0.grid_evicted.has_value());

    // Same cell, equal fitness: the incumbent stays.
    auto r1 = grid.offer(1, 2, 0.3, 1.0);
    CHECK(r1.cell == r0.cell);
    CHECK_FALSE(r1.grid_inserted);
    CHECK(grid.cells().at(r0.cell) == 0);

    struct Offer {
        std::size_t id;
        std::size_t complexity;
        double diversity;
        double fitness;
    };
    // Independent dominance model over a random stream.
    std::mt19937_64 rng(12);
    std::uniform_int_distribution<std::size_t> cx(0, 10);
    std::uniform_real_distribution<double> dv(0.0, 1.0), ft(-5.0, 5.0);
    MapElitesGrid g(8, 10.0);
    std::map<std::array<int, 3>, std::pair<std::size_t, double>> model;
    for (std::size_t id = 0; id < 1000; ++id) {
        const Offer o{id, cx(rng), dv(rng), ft(rng)};
        const auto rep = g.offer(o.id, o.complexity, o.diversity, o.fitness);
        auto it = model.find(rep.cell);
        if (it == model.end()) {
            CHECK(rep.grid_inserted);
            model[rep.cell] = {o.id, o.fitness};
        } else if (o.fitness > it->second.second) {
            CHECK(rep.grid_inserted);
            CHECK(rep.grid_evicted == it->second.first);
            it->second = {o.id, o.fitness};
        } else {
            CHECK_FALSE(rep.grid_inserted);
        }
    }
    REQUIRE(g.cells().size() == model.size());
    for (const auto& [cell, entry] : model) {
        CHECK(g.cells().at(cell) == entry.first);
        CHECK(g.cell_fitness().at(cell) == entry.second);
    }
}

TEST_CASE("archive equals the brute-force top-K with earliest-id ties") {
    EliteArchive archive(10);
    std::vector<std::pair<double, std::size_t>> all;
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> coarse(-5, 5);  // deliberate ties
    for (std::size_t id = 0; id < 300; ++id) {
        const double f = static_cast<double>(coarse(rng));
        archive.offer(id, f);
        all.push_back({f, id});
    }
    std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    all.resize(10);
    CHECK(archive.members() == all);
    CHECK(archive.best() == all.front().second);

    // A tie against the current floor does not displace the incumbent.
    EliteArchive tiny(1);
    CHECK(tiny.offer(0, 1.0));
    CHECK_FALSE(tiny.offer(1, 1.0));
    CHECK(tiny.best() == std::size_t{0});
    CHECK(tiny.offer(2, 2.0));
    CHECK(tiny.best() == std::size_t{2});
    CHECK(tiny.members().size() == 1);
    CHECK_FALSE(EliteArchive(5).best().has_value());
}

TEST_CASE("parent sampling is rank-weighted within a uniformly chosen island") {
    // Island 0 holds ids 0..9 with descending fitness.
    IslandSet islands{{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}};
    std::vector<double> fit(10);
    for (std::size_t i = 0; i < 10; ++i) fit[i] = 10.0 - static_cast<double>(i);

    std::mt19937_64 rng(41);
    std::map<std::size_t, int> counts;
    const int draws = 20000;
    for (int i = 0; i < draws; ++i) ++counts[sample_parent(islands, fit, 1.0, rng)];
    const double p_best = static_cast<double>(counts[0]) / draws;
    CHECK(p_best > 0.60);
    CHECK(p_best < 0.67);
    CHECK(counts[0] > counts[1]);
    CHECK(counts[1] > counts[2]);

    // Islands are picked uniformly regardless of their quality.
    IslandSet two{{0}, {1}};
    std::vector<double> fit2{100.0, 0.0};
    std::map<std::size_t, int> c2;
    for (int i = 0; i < 20000; ++i) ++c2[sample_parent(two, fit2, 1.0, rng)];
    const double p_poor = static_cast<double>(c2[1]) / 20000.0;
    CHECK(p_poor > 0.45);
    CHECK(p_poor < 0.55);

    // Empty islands are skipped entirely; an empty population throws.
    IslandSet holey{{}, {3}, {}};
    std::vector<double> fit3{0, 0, 0, 7.0};
    CHECK(sample_parent(holey, fit3, 1.0, rng) == 3);
    IslandSet empty{{}, {}};
    CHECK_THROWS(sample_parent(empty, fit3, 1.0, rng));

    // Identical seeds reproduce the pick sequence.
    std::mt19937_64 a(5), b(5);
    for (int i = 0; i < 100; ++i)
        CHECK(sample_parent(islands, fit, 1.0, a) == sample_parent(islands, fit, 1.0, b));
}

TEST_CASE("inspiration sampling dedups and honors k") {
    MapElitesGrid grid(4, 8.0);
    EliteArchive archive(10);
    std::vector<double> fit{0.1, 0.9, 0.5, 0.3};
    for (std::size_t id = 0; id < 4; ++id) {
        grid.offer(id, id, 0.2 * static_cast<double>(id), fit[id]);
        archive.offer(id, fit[id]);
    }
    std::mt19937_64 rng(9);

    auto insp = sample_inspirations(grid, archive, fit, 2, 4, rng);
    REQUIRE_FALSE(insp.empty());
    CHECK(insp.front() == 1);  // archive best leads
    std::set<std::size_t> uniq(insp.begin(), insp.end());
    CHECK(uniq.size() == insp.size());
    CHECK(insp.size() <= 4);

    // k = 1 returns just the archive best.
    auto one = sample_inspirations(grid, archive, fit, 2, 1, rng);
    CHECK(one == std::vector<std::size_t>{1});

    // Recent-window best (last two ids: 2 and 3 -> id 2) is included.
    auto k2 = sample_inspirations(grid, archive, fit, 2, 2, rng);
    REQUIRE(k2.size() == 2);
    CHECK(k2[0] == 1);
    CHECK(k2[1] == 2);

    // Nothing anywhere: empty result.
    MapElitesGrid g2(4, 8.0);
    EliteArchive a2(4);
    auto none = sample_inspirations(g2, a2, {}, 5, 3, rng);
    CHECK(none.empty());
}

TEST_CASE("migration copies elites around the ring and skips residents") {
    IslandSet islands{{0}, {1}, {2}};
    const std::vector<double> fit{3.0, 2.0, 1.0};

    auto r1 = migrate(islands, fit, 0.10);
    CHECK(r1.moved == 3);
    CHECK(r1.copies == std::vector<std::pair<std::size_t, std::size_t>>{{0, 1}, {1, 2}, {2, 0}});
    CHECK(islands[0] == std::vector<std::size_t>{0, 2});
    CHECK(islands[1] == std::vector<std::size_t>{1, 0});
    CHECK(islands[2] == std::vector<std::size_t>{2, 1});

    // Second round: only copies that are not already resident land.
    auto r2 = migrate(islands, fit, 0.10);
    CHECK(r2.moved == 2);
    CHECK(islands[1] == std::vector<std::size_t>{1, 0});  // 0 already there

    // Third round: the global best is everywhere, nothing moves.
    auto r3 = migrate(islands, fit, 0.10);
    CHECK(r3.moved == 0);
}

TEST_CASE("migration count is ceil(rate x size), at least one") {
    std::vector<double> fit(40, 0.0);
    for (std::size_t i = 0; i < 40; ++i) fit[i] = static_cast<double>(i);

    IslandSet islands(2);
    for (std::size_t i = 0; i < 25; ++i) islands[0].push_back(i);       // ceil(2.5) = 3
    for (std::size_t i = 25; i < 35; ++i) islands[1].push_back(i);      // ceil(1.0) = 1
    auto rep = migrate(islands, fit, 0.10);
    CHECK(rep.moved == 4);
    // Island 0 exports its three best ids (24, 23, 22), island 1 its best (34).
    CHECK(islands[1].back() == 22);
    CHECK(std::count(islands[1].begin(), islands[1].end(), 24) == 1);
    CHECK(std::count(islands[1].begin(), islands[1].end(), 23) == 1);
    CHECK(islands[0].back() == 34);

    // Single island: migration is a no-op.
    IslandSet solo{{0, 1, 2}};
    CHECK(migrate(solo, fit, 0.5).moved == 0);

    // Empty source islands contribute nothing but still receive.
    IslandSet gap{{0}, {}};
    auto g = migrate(gap, fit, 0.10);
    CHECK(g.moved == 1);
    CHECK(gap[1] == std::vector<std::size_t>{0});
    CHECK(gap[0] == std::vector<std::size_t>{0});
}

TEST_CASE("perturb mutator stays inside bounds and preserves keys") {
    const auto space = two_dim_space();
    Genome parent{{"A", 9.9}, {"B", 9.0}, {"UNTRACKED", 42.0}};
    PerturbMutator mut(PerturbConfig{1.0, 0.5, false});
    std::mt19937_64 rng(2);
    bool a_changed = false;
    for (int i = 0; i < 200; ++i) {
        const auto child = mut.propose(parent, {}, space, rng);
        REQUIRE(child.size() == 3);
        CHECK(child.at("A") >= 0.0);
        CHECK(child.at("A") <= 10.0);
        CHECK(child.at("B") >= 1e-3);
        CHECK(child.at("B") <= 10.0);
        CHECK(child.at("UNTRACKED") == 42.0);
        if (child.at("A") != parent.at("A")) a_changed = true;
    }
    CHECK(a_changed);

    // p_mut = 0 and no crossover: the child is the parent.
    PerturbMutator frozen(PerturbConfig{0.0, 0.5, false});
    CHECK(frozen.propose(parent, {}, space, rng) == parent);

    // Determinism under a fixed stream.
    std::mt19937_64 r1(33), r2(33);
    CHECK(mut.propose(parent, {}, space, r1) == mut.propose(parent, {}, space, r2));

    CHECK(mut.tag() == "perturb");
    CHECK(PerturbMutator(PerturbConfig{0.9, 0.25, true}).tag() == "perturb_cross");
}

TEST_CASE("crossover blends toward the mate on each dimension's scale") {
    const auto space = two_dim_space();
    Genome parent{{"A", 2.0}, {"B", 1e-2}};
    Genome mate{{"A", 6.0}, {"B", 1.0}};
    PerturbMutator mut(PerturbConfig{0.0, 0.25, true});  // midpoint only, no noise
    std::mt19937_64 rng(8);
    const std::vector<const Genome*> insp{&mate};
    const auto child = mut.propose(parent, insp, space, rng);
    CHECK(child.at("A") == doctest::Approx(4.0).epsilon(1e-14));
    // Log-scaled dimension: geometric midpoint.
    CHECK(child.at("B") == doctest::Approx(0.1).epsilon(1e-12));

    // No inspirations: crossover quietly degrades to plain perturbation.
    const auto alone = mut.propose(parent, {}, space, rng);
    CHECK(alone == parent);
}

TEST_CASE("subprocess mutator round-trips a genome through a child process") {
    SubprocessMutator identity("identity", EVOBT_IDENTITY_MUTATOR);
    const auto space = two_dim_space();
    Genome parent{{"A", 3.25}, {"B", 0.125}};
    Genome mate{{"A", 1.0}, {"B", 1.0}};
    std::mt19937_64 rng(4);
    const std::vector<const Genome*> insp{&mate};
    const auto child = identity.propose(parent, insp, space, rng);
    CHECK(child == parent);
    CHECK(identity.tag() == "identity");

    SubprocessMutator broken("broken", "false");
    CHECK_THROWS_WITH_AS(broken.propose(parent, insp, space, rng),
                         doctest::Contains("exited nonzero"), std::runtime_error);
}

TEST_CASE("evolve is deterministic and parallel evaluation changes nothing") {
    EvolveConfig cfg;
    cfg.generations = 12;
    cfg.gen_size = 5;
    cfg.seed = 2024;

    const auto a = evolve(mid_genome(), two_dim_space(), toy_evaluator(), cfg);
    const auto b = evolve(mid_genome(), two_dim_space(), toy_evaluator(), cfg);
    EvolveConfig par = cfg;
    par.jobs = 4;
    const auto c = evolve(mid_genome(), two_dim_space(), toy_evaluator(), par);

    REQUIRE(a.candidates.size() == 61);
    REQUIRE(b.candidates.size() == 61);
    REQUIRE(c.candidates.size() == 61);
    for (std::size_t i = 0; i < a.candidates.size(); ++i) {
        CHECK(a.candidates[i].genome == b.candidates[i].genome);
        CHECK(a.candidates[i].genome == c.candidates[i].genome);
        CHECK(a.candidates[i].fitness == b.candidates[i].fitness);
        CHECK(a.candidates[i].fitness == c.candidates[i].fitness);
        CHECK(a.candidates[i].mutator_tag == c.candidates[i].mutator_tag);
    }
    CHECK(a.is_curve == c.is_curve);
    CHECK(a.oos_curve == c.oos_curve);
    CHECK(a.best_id == c.best_id);

    EvolveConfig other = cfg;
    other.seed = 2025;
    const auto d = evolve(mid_genome(), two_dim_space(), toy_evaluator(), other);
    bool any_diff = false;
    for (std::size_t i = 1; i < d.candidates.size() && !any_diff; ++i)
        any_diff = d.candidates[i].genome != a.candidates[i].genome;
    CHECK(any_diff);
}

TEST_CASE("evolve improves the toy objective and keeps curves consistent") {
    EvolveConfig cfg;
    cfg.generations = 40;
    cfg.gen_size = 5;
    cfg.seed = 7;
    const auto run = evolve(mid_genome(), two_dim_space(), toy_evaluator(), cfg);

    REQUIRE(run.is_curve.size() == run.candidates.size());
    REQUIRE(run.oos_curve.size() == run.candidates.size());
    for (std::size_t i = 1; i < run.is_curve.size(); ++i)
        CHECK(run.is_curve[i] >= run.is_curve[i - 1]);

    REQUIRE(run.best_id.has_value());
    const auto& best = run.candidates[*run.best_id];
    CHECK(*best.fitness == run.is_curve.back());
    CHECK(run.oos_curve.back() == *best.oos_fitness);
    for (const auto& c : run.candidates)
        if (c.fitness) CHECK(*c.fitness <= *best.fitness);

    // The seed scores about -(3^2) - (0.5^2); evolution should get close
    // to the optimum at (8, 0.5-scaled B).
    CHECK(*run.candidates[0].fitness < -9.0);
    CHECK(*best.fitness > -0.5);

    // Generation sizes and parentage are well-formed.
    CHECK(run.candidates[0].mutator_tag == "seed");
    CHECK_FALSE(run.candidates[0].parent_id.has_value());
    for (std::size_t i = 1; i < run.candidates.size(); ++i) {
        REQUIRE(run.candidates[i].parent_id.has_value());
        CHECK(*run.candidates[i].parent_id < i);
        CHECK(run.candidates[i].generation >= 1);
    }
}

TEST_CASE("selection is blind to out-of-sample fitness") {
    EvolveConfig cfg;
    cfg.generations = 15;
    cfg.gen_size = 5;
    cfg.seed = 99;
    const auto with_oos = evolve(mid_genome(), two_dim_space(), toy_evaluator(true), cfg);
    const auto without = evolve(mid_genome(), two_dim_space(), toy_evaluator(false), cfg);
    REQUIRE(with_oos.candidates.size() == without.candidates.size());
    for (std::size_t i = 0; i < with_oos.candidates.size(); ++i) {
        CHECK(with_oos.candidates[i].genome == without.candidates[i].genome);
        CHECK(with_oos.candidates[i].fitness == without.candidates[i].fitness);
        CHECK(with_oos.candidates[i].island == without.candidates[i].island);
    }
    CHECK(with_oos.is_curve == without.is_curve);
    CHECK(with_oos.best_id == without.best_id);
    for (const auto& c : without.candidates) CHECK_FALSE(c.oos_fitness.has_value());
}

TEST_CASE("failed evaluations are quarantined from islands, grid and archive") {
    EvolveConfig cfg;
    cfg.generations = 10;
    cfg.gen_size = 5;
    cfg.seed = 3;
    auto fragile = [](const Genome& g) -> EvalResult {
        const double a = g.at("A");
        if (a > 6.0) throw std::runtime_error("blow up");
        if (a > 5.5) return {std::nan(""), 0.0};
        EvalResult r;
        r.fitness = -(a - 5.0) * (a - 5.0);
        return r;
    };
    const auto run = evolve(mid_genome(), two_dim_space(), fragile, cfg);

    std::size_t failed = 0;
    std::set<std::size_t> islanders;
    for (const auto& isl : run.islands) islanders.insert(isl.begin(), isl.end());
    for (const auto& c : run.candidates) {
        if (c.failed()) {
            ++failed;
            CHECK(c.cell == std::array<int, 3>{-1, -1, -1});
            CHECK(islanders.count(c.id) == 0);
        } else {
            CHECK(c.cell[0] >= 0);
            CHECK(islanders.count(c.id) == 1);
        }
    }
    CHECK(failed > 0);
    CHECK(failed < run.candidates.size());
    for (const auto& [fit, id] : run.archive_members) CHECK_FALSE(run.candidates[id].failed());
}

TEST_CASE("budget violations take the haircut at admission") {
    ParamSpace space{{{"A", 0.0, 10.0, Scale::linear}}};
    Genome fat;
    for (int i = 0; i < 20; ++i) fat["P" + std::to_string(i)] = 1.0;
    fat["A"] = 5.0;
    EvolveConfig cfg;
    cfg.generations = 2;
    cfg.gen_size = 3;
    cfg.budget_cap = 18;
    cfg.budget_haircut = 0.5;
    auto flat100 = [](const Genome&) -> EvalResult { return {100.0, 0.0}; };
    const auto run = evolve(fat, space, flat100, cfg);
    for (const auto& c : run.candidates) {
        CHECK(c.budget_violation);
        CHECK(c.budget_count == 21);
        REQUIRE(c.fitness.has_value());
        CHECK(*c.fitness == apply_budget_haircut(100.0, 0.5));
    }

    Genome lean{{"A", 5.0}};
    const auto clean = evolve(lean, space, flat100, cfg);
    for (const auto& c : clean.candidates) {
        CHECK_FALSE(c.budget_violation);
        CHECK(*c.fitness == 100.0);
    }
}

TEST_CASE("zero generations yields only the evaluated seed") {
    EvolveConfig cfg;
    cfg.generations = 0;
    const auto run = evolve(mid_genome(), two_dim_space(), toy_evaluator(), cfg);
    REQUIRE(run.candidates.size() == 1);
    CHECK(run.candidates[0].mutator_tag == "seed");
    CHECK(run.is_curve.size() == 1);
    CHECK(run.migrations == 0);
}

TEST_CASE("external mutators join the rotation") {
    EvolveConfig cfg;
    cfg.generations = 10;
    cfg.gen_size = 5;
    cfg.seed = 31;
    auto identity = std::make_shared<SubprocessMutator>("identity", EVOBT_IDENTITY_MUTATOR);
    const auto run = evolve(mid_genome(), two_dim_space(), toy_evaluator(), cfg, {identity});

    std::size_t used = 0;
    for (const auto& c : run.candidates)
        if (c.mutator_tag == "identity") {
            ++used;
            REQUIRE(c.parent_id.has_value());
            CHECK(c.genome == run.candidates[*c.parent_id].genome);
        }
    CHECK(used > 0);
}

TEST_CASE("migration replay reconstructs the final islands exactly") {
    EvolveConfig cfg;
    cfg.generations = 200;
    cfg.gen_size = 5;
    cfg.seed = 55;
    const auto run = evolve(mid_genome(), two_dim_space(), toy_evaluator(), cfg);
    REQUIRE(run.candidates.size() == 1001);
    REQUIRE(run.migration_log.size() == 40);  // every fifth generation

    std::vector<double> fit(run.candidates.size());
    for (const auto& c : run.candidates)
        fit[c.id] = c.fitness ? *c.fitness : -std::numeric_limits<double>::infinity();

    IslandSet model(5);
    std::size_t next = 0;
    auto admit_through = [&](std::size_t gen) {
        for (; next < run.candidates.size() && run.candidates[next].generation <= gen; ++next)
            if (run.candidates[next].fitness)
                model[run.candidates[next].island].push_back(next);
    };

    std::size_t replayed_moves = 0;
    for (const auto& [gen, report] : run.migration_log) {
        admit_through(gen);
        // Recompute what migrate must have exported from each island.
        std::vector<std::vector<std::size_t>> outgoing(model.size());
        for (std::size_t i = 0; i < model.size(); ++i) {
            if (model[i].empty()) continue;
            auto order = model[i];
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                if (fit[a] != fit[b]) return fit[a] > fit[b];
                return a < b;
            });
            const auto k = std::max<std::size_t>(
                1, static_cast<std::size_t>(std::ceil(0.10 * static_cast<double>(order.size()))));
            order.resize(std::min(k, order.size()));
            outgoing[i] = order;
        }
        std::vector<std::pair<std::size_t, std::size_t>> expect;
        for (std::size_t i = 0; i < model.size(); ++i) {
            auto& dest = model[(i + 1) % model.size()];
            for (std::size_t id : outgoing[i])
                if (std::find(dest.begin(), dest.end(), id) == dest.end()) {
                    dest.push_back(id);
                    expect.push_back({id, (i + 1) % model.size()});
                }
        }
        CHECK(report.copies == expect);
        CHECK(report.moved == expect.size());
        replayed_moves += report.moved;
    }
    admit_through(cfg.generations);
    CHECK(model == run.islands);
    CHECK(replayed_moves == run.migrations);
    CHECK(run.migrations > 0);
}

TEST_CASE("recorded cells replay against a fresh grid") {
    EvolveConfig cfg;
    cfg.generations = 60;
    cfg.gen_size = 5;
    cfg.seed = 14;
    const auto run = evolve(mid_genome(), two_dim_space(), toy_evaluator(), cfg);

    MapElitesGrid grid(cfg.grid_bins, 2.0 * static_cast<double>(cfg.budget_cap));
    for (const auto& c : run.candidates) {
        if (!c.fitness) continue;
        const auto rep = grid.offer(c.id, c.complexity, c.diversity, *c.fitness);
        CHECK(rep.cell == c.cell);
    }
}

TEST_CASE("mutator statistics aggregate proposals, wins and lineage") {
    EvolveConfig cfg;
    cfg.generations = 30;
    cfg.gen_size = 5;
    cfg.seed = 21;
    const auto run = evolve(mid_genome(), two_dim_space(), toy_evaluator(), cfg);
    const auto stats = mutator_stats(run.candidates);

    std::size_t proposed = 0, top20 = 0;
    bool saw_perturb = false;
    for (const auto& s : stats) {
        CHECK(s.tag != "seed");
        proposed += s.proposed;
        top20 += s.top20;
        CHECK(s.improved <= s.comparable);
        CHECK(s.comparable <= s.proposed);
        if (s.comparable > 0)
            CHECK(s.improvement_rate ==
                  doctest::Approx(static_cast<double>(s.improved) /
                                  static_cast<double>(s.comparable)));
        if (s.tag == "perturb") saw_perturb = true;
    }
    CHECK(saw_perturb);
    CHECK(proposed == run.candidates.size() - 1);
    CHECK(top20 <= 20);

    // Lineage steps trace the champion's ancestry, excluding the seed root.
    std::size_t lineage = 0;
    for (const auto& s : stats) lineage += s.lineage_steps;
    std::size_t walk = 0;
    auto cur = *run.best_id;
    while (run.candidates[cur].parent_id) {
        ++walk;
        cur = *run.candidates[cur].parent_id;
    }
    CHECK(lineage == walk);
}

TEST_CASE("run records round-trip through jsonl") {
    EvolveConfig cfg;
    cfg.generations = 8;
    cfg.gen_size = 4;
    cfg.seed = 2;
    auto spotty = [](const Genome& g) -> EvalResult {
        const double a = g.at("A");
        if (a < 2.0) throw std::runtime_error("fail zone");
        EvalResult r;
        r.fitness = a;
        r.oos_fitness = a * 0.5;
        return r;
    };
    const auto run = evolve(mid_genome(), two_dim_space(), spotty, cfg);

    const auto path = tmp_file("run_record");
    write_run_record(run.candidates, path.string());
    const auto back = read_run_record(path.string());
    REQUIRE(back.size() == run.candidates.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        const auto& a = run.candidates[i];
        const auto& b = back[i];
        CHECK(b.id == a.id);
        CHECK(b.parent_id == a.parent_id);
        CHECK(b.generation == a.generation);
        CHECK(b.mutator_tag == a.mutator_tag);
        CHECK(b.genome == a.genome);
        CHECK(b.fitness == a.fitness);
        CHECK(b.oos_fitness == a.oos_fitness);
        CHECK(b.complexity == a.complexity);
        CHECK(b.diversity == a.diversity);
        CHECK(b.cell == a.cell);
        CHECK(b.island == a.island);
        CHECK(b.budget_count == a.budget_count);
        CHECK(b.budget_violation == a.budget_violation);
    }
    std::filesystem::remove(path);

    CHECK_THROWS(read_run_record("/nonexistent/record.jsonl"));
    const auto bad = tmp_file("bad_record");
    write_file(bad, "{not json}\n");
    CHECK_THROWS_WITH_AS(read_run_record(bad.string()), doctest::Contains("line 1"),
                         std::runtime_error);
    std::filesystem::remove(bad);
}
