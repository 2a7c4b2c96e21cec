// evolution.cpp
#include "evobt/evolution.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace evobt {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

int clamp_bin(double frac, int bins) {
    const int b = static_cast<int>(frac * bins);
    return b < 0 ? 0 : (b >= bins ? bins - 1 : b);
}

double scaled_distance(const Genome& g, const Genome& seed, const ParamSpace& space) {
    if (space.dims.empty()) return 0.0;
    double ss = 0.0;
    for (const ParamSpec& d : space.dims) {
        const auto ig = g.find(d.name);
        const auto is = seed.find(d.name);
        const double ug = ig != g.end() ? d.unit(ig->second) : 0.0;
        const double us = is != seed.end() ? d.unit(is->second) : 0.0;
        const double diff = ug - us;
        ss += diff * diff;
    }
    return std::sqrt(ss / static_cast<double>(space.dims.size()));
}

}  // namespace

BudgetCheck check_budget(const Genome& genome, std::size_t cap) {
    return {genome.size() <= cap, genome.size()};
}

BudgetCheck check_budget_text(const std::string& text, std::size_t cap) {
    std::size_t count = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::size_t i = pos;
        while (i < eol && (text[i] == ' ' || text[i] == '\t')) ++i;
        // Module-level constant: UPPER_CASE name followed by '='.
        if (i < eol && i == pos && text[i] >= 'A' && text[i] <= 'Z') {
            std::size_t j = i;
            while (j < eol && ((text[j] >= 'A' && text[j] <= 'Z') ||
                               (text[j] >= '0' && text[j] <= '9') || text[j] == '_'))
                ++j;
            std::size_t s = j;
            while (s < eol && (text[s] == ' ' || text[s] == '\t')) ++s;
            if (j > i && s < eol && text[s] == '=' && (s + 1 >= eol || text[s + 1] != '='))
                ++count;
        }
        pos = eol + 1;
    }
    return {count <= cap, count};
}

double apply_budget_haircut(double fitness, double haircut) {
    return fitness - std::abs(fitness) * (1.0 - haircut);
}

std::array<int, 3> MapElitesGrid::bin_of(std::size_t complexity, double diversity,
                                         double fitness) {
    if (!has_range_) {
        fit_lo_ = fit_hi_ = fitness;
        has_range_ = true;
    } else {
        fit_lo_ = std::min(fit_lo_, fitness);
        fit_hi_ = std::max(fit_hi_, fitness);
    }
    const int cb = clamp_bin(static_cast<double>(complexity) / complexity_hi_, bins_);
    const int db = clamp_bin(diversity, bins_);
    const double span = fit_hi_ - fit_lo_;
    const int sb = span > 0.0 ? clamp_bin((fitness - fit_lo_) / span, bins_) : 0;
    return {cb, db, sb};
}

InsertReport MapElitesGrid::offer(std::size_t id, std::size_t complexity, double diversity,
                                  double fitness) {
    InsertReport rep;
    rep.cell = bin_of(complexity, diversity, fitness);
    auto it = cells_.find(rep.cell);
    if (it == cells_.end()) {
        cells_[rep.cell] = id;
        fitness_[rep.cell] = fitness;
        rep.grid_inserted = true;
    } else if (fitness > fitness_[rep.cell]) {
        rep.grid_evicted = it->second;
        it->second = id;
        fitness_[rep.cell] = fitness;
        rep.grid_inserted = true;
    }
    return rep;
}

bool EliteArchive::offer(std::size_t id, double fitness) {
    const auto pos = std::find_if(members_.begin(), members_.end(),
                                  [&](const auto& m) { return fitness > m.first; });
    if (members_.size() >= capacity_ && pos == members_.end()) return false;
    members_.insert(pos, {fitness, id});
    if (members_.size() > capacity_) members_.pop_back();
    return true;
}

std::optional<std::size_t> EliteArchive::best() const {
    if (members_.empty()) return std::nullopt;
    return members_.front().second;
}

std::size_t sample_parent(const IslandSet& islands, const std::vector<double>& fitness_by_id,
                          double exploit_temp, std::mt19937_64& rng) {
    std::vector<std::size_t> populated;
    for (std::size_t i = 0; i < islands.size(); ++i)
        if (!islands[i].empty()) populated.push_back(i);
    if (populated.empty()) throw std::runtime_error("sample_parent: empty population");

    std::uniform_int_distribution<std::size_t> pick(0, populated.size() - 1);
    const auto& members = islands[populated[pick(rng)]];

    std::vector<std::size_t> order(members.begin(), members.end());
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (fitness_by_id[a] != fitness_by_id[b]) return fitness_by_id[a] > fitness_by_id[b];
        return a < b;
    });

    double total = 0.0;
    std::vector<double> w(order.size());
    for (std::size_t r = 0; r < order.size(); ++r) {
        w[r] = std::exp(-static_cast<double>(r) / exploit_temp);
        total += w[r];
    }
    std::uniform_real_distribution<double> u(0.0, total);
    double x = u(rng);
    for (std::size_t r = 0; r < order.size(); ++r) {
        x -= w[r];
        if (x <= 0.0) return order[r];
    }
    return order.back();
}

std::vector<std::size_t> sample_inspirations(const MapElitesGrid& grid, const EliteArchive& archive,
                                             const std::vector<double>& fitness_by_id,
                                             std::size_t recent_window, std::size_t k,
                                             std::mt19937_64& rng) {
    std::vector<std::size_t> out;
    auto push_unique = [&](std::size_t id) {
        if (out.size() < k && std::find(out.begin(), out.end(), id) == out.end())
            out.push_back(id);
    };

    if (const auto best = archive.best()) push_unique(*best);

    // Best of the most recently evaluated ids (ids are assigned in evaluation
    // order, so the tail of the fitness array is the recent window).
    const std::size_t n = fitness_by_id.size();
    const std::size_t lo = n > recent_window ? n - recent_window : 0;
    std::size_t recent_best = n;
    for (std::size_t i = lo; i < n; ++i)
        if (std::isfinite(fitness_by_id[i]) &&
            (recent_best == n || fitness_by_id[i] > fitness_by_id[recent_best]))
            recent_best = i;
    if (recent_best < n) push_unique(recent_best);

    // Diversity slots: random occupied grid cells.
    const auto& cells = grid.cells();
    if (!cells.empty()) {
        std::vector<std::size_t> occupants;
        occupants.reserve(cells.size());
        for (const auto& [cell, id] : cells) occupants.push_back(id);
        std::uniform_int_distribution<std::size_t> pick(0, occupants.size() - 1);
        for (std::size_t tries = 0; tries < 4 * k && out.size() < k; ++tries)
            push_unique(occupants[pick(rng)]);
    }
    return out;
}

MigrationReport migrate(IslandSet& islands, const std::vector<double>& fitness_by_id,
                        double rate) {
    MigrationReport rep;
    const std::size_t n = islands.size();
    if (n < 2) return rep;

    std::vector<std::vector<std::size_t>> outgoing(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (islands[i].empty()) continue;
        std::vector<std::size_t> order(islands[i].begin(), islands[i].end());
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (fitness_by_id[a] != fitness_by_id[b]) return fitness_by_id[a] > fitness_by_id[b];
            return a < b;
        });
        const std::size_t k = std::max<std::size_t>(
            1, static_cast<std::size_t>(
                   std::ceil(rate * static_cast<double>(order.size()))));
        for (std::size_t j = 0; j < std::min(k, order.size()); ++j)
            outgoing[i].push_back(order[j]);
    }
    for (std::size_t i = 0; i < n; ++i) {
        auto& dest = islands[(i + 1) % n];
        for (std::size_t id : outgoing[i]) {
            if (std::find(dest.begin(), dest.end(), id) == dest.end()) {
                dest.push_back(id);
                rep.copies.push_back({id, (i + 1) % n});
                ++rep.moved;
            }
        }
    }
    return rep;
}

Genome PerturbMutator::propose(const Genome& parent, const std::vector<const Genome*>& inspirations,
                               const ParamSpace& space, std::mt19937_64& rng) {
    Genome child = parent;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    if (cfg_.with_crossover && !inspirations.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, inspirations.size() - 1);
        const Genome& mate = *inspirations[pick(rng)];
        for (const ParamSpec& d : space.dims) {
            const auto a = child.find(d.name);
            const auto b = mate.find(d.name);
            if (a == child.end() || b == mate.end()) continue;
            const double u = 0.5 * (d.to_scale(d.clip(a->second)) + d.to_scale(d.clip(b->second)));
            a->second = d.clip(d.from_scale(u));
        }
    }
    for (const ParamSpec& d : space.dims) {
        const auto it = child.find(d.name);
        if (it == child.end()) continue;
        if (unit(rng) >= cfg_.p_mut) continue;
        const double width = d.hi_scaled() - d.lo_scaled();
        const double u = d.to_scale(d.clip(it->second)) + gauss(rng) * cfg_.sigma_rel * width;
        it->second = d.clip(d.from_scale(u));
    }
    return child;
}

Genome SubprocessMutator::propose(const Genome& parent,
                                  const std::vector<const Genome*>& inspirations,
                                  const ParamSpace& space, std::mt19937_64& rng) {
    nlohmann::json req;
    req["parent"] = parent;
    req["inspirations"] = nlohmann::json::array();
    for (const Genome* g : inspirations) req["inspirations"].push_back(*g);
    req["bounds"] = nlohmann::json::object();
    for (const ParamSpec& d : space.dims)
        req["bounds"][d.name] = {{"lower", d.lower},
                                 {"upper", d.upper},
                                 {"scale", d.scale == Scale::log10 ? "log10" : "linear"}};
    req["seed"] = rng();

    const std::string payload = req.dump();
    const std::string cmd = command_;

    // Round-trip over a pipe pair via popen: write request to a temp file,
    // feed it on stdin, capture stdout.
    std::string tmp = "/tmp/evobt_mut_" + std::to_string(::getpid()) + "_" +
                      std::to_string(rng()) + ".json";
    {
        std::ofstream out(tmp);
        if (!out) throw std::runtime_error("subprocess mutator: cannot write " + tmp);
        out << payload;
    }
    const std::string full = cmd + " < " + tmp;
    FILE* pipe = ::popen(full.c_str(), "r");
    if (!pipe) {
        std::remove(tmp.c_str());
        throw std::runtime_error("subprocess mutator: cannot spawn " + cmd);
    }
    std::string reply;
    char buf[4096];
    std::size_t got;
    while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) reply.append(buf, got);
    const int rc = ::pclose(pipe);
    std::remove(tmp.c_str());
    if (rc != 0) throw std::runtime_error("subprocess mutator: " + cmd + " exited nonzero");

    const auto j = nlohmann::json::parse(reply);
    Genome child;
    for (auto it = j.begin(); it != j.end(); ++it) child[it.key()] = it.value().get<double>();
    return child;
}

EvolutionRun evolve(const Genome& seed_genome, const ParamSpace& space, const Evaluator& evaluator,
                    const EvolveConfig& cfg,
                    const std::vector<std::shared_ptr<Mutator>>& extra_mutators) {
    space.validate();
    if (cfg.n_islands == 0) throw std::runtime_error("evolve: need at least one island");

    std::mt19937_64 rng(cfg.seed);
    MapElitesGrid grid(cfg.grid_bins, 2.0 * static_cast<double>(cfg.budget_cap));
    EliteArchive archive(cfg.archive_capacity);
    IslandSet islands(cfg.n_islands);

    EvolutionRun run;
    std::vector<double> fitness_by_id;  // kNegInf for failed candidates

    std::vector<std::shared_ptr<Mutator>> mutators;
    mutators.push_back(
        std::make_shared<PerturbMutator>(PerturbConfig{cfg.p_mut, cfg.sigma_rel, false}));
    mutators.push_back(
        std::make_shared<PerturbMutator>(PerturbConfig{cfg.p_mut, cfg.sigma_rel, true}));
    for (const auto& m : extra_mutators) mutators.push_back(m);

    double best_fit = kNegInf;
    double best_oos = 0.0;

    auto evaluate_genome = [&](const Genome& g) -> EvalResult {
        try {
            return evaluator(g);
        } catch (const std::exception&) {
            return {};
        }
    };

    auto admit = [&](Candidate&& c, const EvalResult& eval) {
        c.id = run.candidates.size();
        const BudgetCheck budget = check_budget(c.genome, cfg.budget_cap);
        c.budget_count = budget.count;
        c.budget_violation = !budget.ok;
        c.complexity = budget.count;
        c.diversity = scaled_distance(c.genome, seed_genome, space);
        if (eval.fitness && std::isfinite(*eval.fitness)) {
            double f = *eval.fitness;
            if (c.budget_violation) f = apply_budget_haircut(f, cfg.budget_haircut);
            c.fitness = f;
        }
        c.oos_fitness = eval.oos_fitness;

        fitness_by_id.push_back(c.fitness ? *c.fitness : kNegInf);
        if (c.fitness) {
            const InsertReport rep = grid.offer(c.id, c.complexity, c.diversity, *c.fitness);
            c.cell = rep.cell;
            islands[c.island].push_back(c.id);
            archive.offer(c.id, *c.fitness);
            if (*c.fitness > best_fit) {
                best_fit = *c.fitness;
                best_oos = c.oos_fitness.value_or(0.0);
                run.best_id = c.id;
            }
        }
        run.is_curve.push_back(best_fit);
        run.oos_curve.push_back(best_oos);
        run.candidates.push_back(std::move(c));
    };

    {
        Candidate seed;
        seed.generation = 0;
        seed.mutator_tag = "seed";
        seed.genome = seed_genome;
        seed.island = 0;
        admit(std::move(seed), evaluate_genome(seed_genome));
    }

    for (std::size_t gen = 1; gen <= cfg.generations; ++gen) {
        struct Proposal {
            Candidate cand;
            Genome genome;
        };
        std::vector<Proposal> batch;
        for (std::size_t j = 0; j < cfg.gen_size; ++j) {
            const std::size_t parent = sample_parent(islands, fitness_by_id, cfg.exploit_temp, rng);
            const auto insp_ids = sample_inspirations(grid, archive, fitness_by_id,
                                                      cfg.recent_window, cfg.inspiration_k, rng);
            std::vector<const Genome*> inspirations;
            for (std::size_t id : insp_ids) inspirations.push_back(&run.candidates[id].genome);

            std::uniform_real_distribution<double> unit(0.0, 1.0);
            std::size_t pick = unit(rng) < cfg.crossover_fraction ? 1 : 0;
            if (mutators.size() > 2) {
                // Extra mutators share the round uniformly with the built-ins.
                std::uniform_int_distribution<std::size_t> any(0, mutators.size() - 1);
                pick = any(rng);
            }
            Mutator& mutator = *mutators[pick];

            Proposal p;
            p.genome = mutator.propose(run.candidates[parent].genome, inspirations, space, rng);
            p.cand.parent_id = parent;
            p.cand.generation = gen;
            p.cand.mutator_tag = mutator.tag();
            p.cand.genome = p.genome;
            p.cand.island = run.candidates[parent].island;
            batch.push_back(std::move(p));
        }

        std::vector<EvalResult> evals(batch.size());
        if (cfg.jobs > 1 && batch.size() > 1) {
            std::vector<std::future<EvalResult>> futs;
            futs.reserve(batch.size());
            for (const auto& p : batch)
                futs.push_back(std::async(std::launch::async,
                                          [&evaluate_genome, &p] { return evaluate_genome(p.genome); }));
            for (std::size_t i = 0; i < futs.size(); ++i) evals[i] = futs[i].get();
        } else {
            for (std::size_t i = 0; i < batch.size(); ++i)
                evals[i] = evaluate_genome(batch[i].genome);
        }
        for (std::size_t i = 0; i < batch.size(); ++i)
            admit(std::move(batch[i].cand), evals[i]);

        if (cfg.migration_period > 0 && gen % cfg.migration_period == 0) {
            MigrationReport rep = migrate(islands, fitness_by_id, cfg.migration_rate);
            run.migrations += rep.moved;
            run.migration_log.push_back({gen, std::move(rep)});
        }
    }
    run.islands = std::move(islands);
    run.archive_members = archive.members();
    return run;
}

std::vector<MutatorStats> mutator_stats(const std::vector<Candidate>& candidates) {
    std::map<std::string, MutatorStats> acc;
    for (const Candidate& c : candidates) {
        if (c.mutator_tag == "seed") continue;
        MutatorStats& s = acc[c.mutator_tag];
        s.tag = c.mutator_tag;
        ++s.proposed;
        if (c.parent_id && c.fitness && candidates[*c.parent_id].fitness) {
            ++s.comparable;
            if (*c.fitness > *candidates[*c.parent_id].fitness) ++s.improved;
        }
    }

    std::vector<std::size_t> ranked;
    for (const Candidate& c : candidates)
        if (c.fitness) ranked.push_back(c.id);
    std::sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) {
        if (*candidates[a].fitness != *candidates[b].fitness)
            return *candidates[a].fitness > *candidates[b].fitness;
        return a < b;
    });
    if (ranked.size() > 20) ranked.resize(20);
    for (std::size_t id : ranked) {
        const auto& tag = candidates[id].mutator_tag;
        if (tag != "seed") ++acc[tag].top20;
    }

    if (!ranked.empty()) {
        std::size_t cur = ranked.front();
        while (candidates[cur].parent_id) {
            const auto& tag = candidates[cur].mutator_tag;
            if (tag != "seed") ++acc[tag].lineage_steps;
            cur = *candidates[cur].parent_id;
        }
    }

    std::vector<MutatorStats> out;
    for (auto& [tag, s] : acc) {
        s.improvement_rate =
            s.comparable > 0 ? static_cast<double>(s.improved) / static_cast<double>(s.comparable)
                             : 0.0;
        out.push_back(s);
    }
    return out;
}

void write_run_record(const std::vector<Candidate>& candidates, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write run record: " + path);
    for (const Candidate& c : candidates) {
        nlohmann::json j;
        j["id"] = c.id;
        j["parent_id"] = c.parent_id ? nlohmann::json(*c.parent_id) : nlohmann::json();
        j["generation"] = c.generation;
        j["mutator"] = c.mutator_tag;
        j["genome"] = c.genome;
        j["fitness"] = c.fitness ? nlohmann::json(*c.fitness) : nlohmann::json();
        j["oos_fitness"] = c.oos_fitness ? nlohmann::json(*c.oos_fitness) : nlohmann::json();
        j["failed"] = c.failed();
        j["descriptor"] = {{"complexity", c.complexity},
                           {"diversity", c.diversity},
                           {"score", c.fitness ? nlohmann::json(*c.fitness) : nlohmann::json()}};
        j["cell"] = c.cell;
        j["island"] = c.island;
        j["budget_count"] = c.budget_count;
        j["budget_violation"] = c.budget_violation;
        out << j.dump() << '\n';
    }
}

std::vector<Candidate> read_run_record(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open run record: " + path);
    std::vector<Candidate> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ": line " + std::to_string(lineno) + ": " + e.what());
        }
        Candidate c;
        c.id = j.at("id").get<std::size_t>();
        if (!j.at("parent_id").is_null()) c.parent_id = j["parent_id"].get<std::size_t>();
        c.generation = j.at("generation").get<std::size_t>();
        c.mutator_tag = j.at("mutator").get<std::string>();
        for (auto it = j.at("genome").begin(); it != j.at("genome").end(); ++it)
            c.genome[it.key()] = it.value().get<double>();
        if (!j.at("fitness").is_null()) c.fitness = j["fitness"].get<double>();
        if (!j.at("oos_fitness").is_null()) c.oos_fitness = j["oos_fitness"].get<double>();
        if (j.contains("descriptor")) {
            c.complexity = j["descriptor"].value("complexity", std::size_t{0});
            c.diversity = j["descriptor"].value("diversity", 0.0);
        }
        if (j.contains("cell") && j["cell"].is_array() && j["cell"].size() == 3)
            c.cell = {j["cell"][0].get<int>(), j["cell"][1].get<int>(), j["cell"][2].get<int>()};
        c.island = j.value("island", std::size_t{0});
        c.budget_count = j.value("budget_count", std::size_t{0});
        c.budget_violation = j.value("budget_violation", false);
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace evobt
