// evolution.hpp — MAP-Elites grid, island ring, elite archive, mutation loop.
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "evobt/params.hpp"

namespace evobt {

struct Candidate {
    std::size_t id = 0;
    std::optional<std::size_t> parent_id;
    std::size_t generation = 0;
    std::string mutator_tag;
    Genome genome;
    std::optional<double> fitness;      // in-sample; empty means failed
    std::optional<double> oos_fitness;  // recorded only, never drives selection
    std::size_t complexity = 0;         // descriptor: budget-checked key count
    double diversity = 0.0;             // descriptor: scaled distance from seed
    std::array<int, 3> cell{-1, -1, -1};
    std::size_t island = 0;
    std::size_t budget_count = 0;
    bool budget_violation = false;

    bool failed() const { return !fitness.has_value(); }
};

struct BudgetCheck {
    bool ok = true;
    std::size_t count = 0;
};

BudgetCheck check_budget(const Genome& genome, std::size_t cap = 18);
// External mutators ship program text: count module-level UPPER_CASE
// assignments instead of genome keys.
BudgetCheck check_budget_text(const std::string& text, std::size_t cap = 18);

// Worsen fitness multiplicatively toward zero for gains and away from zero
// for losses, so a violation never looks better than the clean run.
double apply_budget_haircut(double fitness, double haircut);

struct InsertReport {
    std::array<int, 3> cell{-1, -1, -1};
    bool grid_inserted = false;
    std::optional<std::size_t> grid_evicted;
    bool archived = false;
};

// Behavioral grid: complexity x diversity x score. Score bins rescale to the
// running fitness range as candidates arrive; cells are assigned at insert
// time and never re-binned.
class MapElitesGrid {
  public:
    explicit MapElitesGrid(int bins = 8, double complexity_hi = 36.0)
        : bins_(bins), complexity_hi_(complexity_hi) {}

    std::array<int, 3> bin_of(std::size_t complexity, double diversity, double fitness);
    // Returns {cell, inserted, evicted occupant id}.
    InsertReport offer(std::size_t id, std::size_t complexity, double diversity, double fitness);

    const std::map<std::array<int, 3>, std::size_t>& cells() const { return cells_; }
    const std::map<std::array<int, 3>, double>& cell_fitness() const { return fitness_; }
    int bins() const { return bins_; }

  private:
    int bins_;
    double complexity_hi_;
    bool has_range_ = false;
    double fit_lo_ = 0.0, fit_hi_ = 0.0;
    std::map<std::array<int, 3>, std::size_t> cells_;
    std::map<std::array<int, 3>, double> fitness_;
};

// Capacity-K global top set; ties keep the earlier id.
class EliteArchive {
  public:
    explicit EliteArchive(std::size_t capacity = 50) : capacity_(capacity) {}
    bool offer(std::size_t id, double fitness);
    const std::vector<std::pair<double, std::size_t>>& members() const { return members_; }
    std::optional<std::size_t> best() const;

  private:
    std::size_t capacity_;
    std::vector<std::pair<double, std::size_t>> members_;  // (fitness, id) desc
};

// Islands hold candidate ids; fitness comes in through a plain array so the
// selection path never sees out-of-sample values.
using IslandSet = std::vector<std::vector<std::size_t>>;

std::size_t sample_parent(const IslandSet& islands, const std::vector<double>& fitness_by_id,
                          double exploit_temp, std::mt19937_64& rng);

std::vector<std::size_t> sample_inspirations(const MapElitesGrid& grid, const EliteArchive& archive,
                                             const std::vector<double>& fitness_by_id,
                                             std::size_t recent_window, std::size_t k,
                                             std::mt19937_64& rng);

struct MigrationReport {
    std::size_t moved = 0;
    std::vector<std::pair<std::size_t, std::size_t>> copies;  // (id, to island)
};

// Copy each island's top ceil(rate * size) members (at least one) to the next
// island on the ring. Originals stay put.
MigrationReport migrate(IslandSet& islands, const std::vector<double>& fitness_by_id,
                        double rate);

class Mutator {
  public:
    virtual ~Mutator() = default;
    virtual std::string tag() const = 0;
    virtual Genome propose(const Genome& parent, const std::vector<const Genome*>& inspirations,
                           const ParamSpace& space, std::mt19937_64& rng) = 0;
};

struct PerturbConfig {
    double p_mut = 0.9;
    double sigma_rel = 0.25;
    bool with_crossover = false;
};

class PerturbMutator : public Mutator {
  public:
    explicit PerturbMutator(PerturbConfig cfg = {}) : cfg_(cfg) {}
    std::string tag() const override { return cfg_.with_crossover ? "perturb_cross" : "perturb"; }
    Genome propose(const Genome& parent, const std::vector<const Genome*>& inspirations,
                   const ParamSpace& space, std::mt19937_64& rng) override;

  private:
    PerturbConfig cfg_;
};

// Spawn `command`, write {parent, inspirations, seed} JSON to its stdin and
// read the child genome JSON from its stdout.
class SubprocessMutator : public Mutator {
  public:
    SubprocessMutator(std::string name, std::string command)
        : name_(std::move(name)), command_(std::move(command)) {}
    std::string tag() const override { return name_; }
    Genome propose(const Genome& parent, const std::vector<const Genome*>& inspirations,
                   const ParamSpace& space, std::mt19937_64& rng) override;

  private:
    std::string name_;
    std::string command_;
};

struct EvolveConfig {
    std::size_t generations = 40;
    std::size_t gen_size = 5;
    std::size_t n_islands = 5;
    std::size_t migration_period = 5;
    double migration_rate = 0.10;
    double exploit_temp = 1.0;
    std::size_t inspiration_k = 4;
    std::size_t recent_window = 20;
    std::size_t budget_cap = 18;
    double budget_haircut = 0.5;
    std::size_t archive_capacity = 50;
    int grid_bins = 8;
    double crossover_fraction = 0.3;  // share of proposals routed to perturb_cross
    double p_mut = 0.9;
    double sigma_rel = 0.25;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
};

// Fitness pair for one genome: in-sample drives selection, out-of-sample is
// logged alongside. Empty in-sample marks the candidate failed.
struct EvalResult {
    std::optional<double> fitness;
    std::optional<double> oos_fitness;
};

using Evaluator = std::function<EvalResult(const Genome&)>;

struct EvolutionRun {
    std::vector<Candidate> candidates;
    std::vector<double> is_curve;   // cumulative best in-sample fitness
    std::vector<double> oos_curve;  // out-of-sample fitness of the incumbent
    std::optional<std::size_t> best_id;
    std::size_t migrations = 0;
    IslandSet islands;  // final membership, for replay checks
    std::vector<std::pair<double, std::size_t>> archive_members;
    std::vector<std::pair<std::size_t, MigrationReport>> migration_log;  // (generation, report)
};

EvolutionRun evolve(const Genome& seed_genome, const ParamSpace& space, const Evaluator& evaluator,
                    const EvolveConfig& cfg,
                    const std::vector<std::shared_ptr<Mutator>>& extra_mutators = {});

struct MutatorStats {
    std::string tag;
    std::size_t proposed = 0;
    std::size_t improved = 0;     // child fitness strictly above parent fitness
    std::size_t comparable = 0;   // both child and parent have fitness
    double improvement_rate = 0.0;
    std::size_t top20 = 0;
    std::size_t lineage_steps = 0;  // occurrences along the best candidate's ancestry
};

std::vector<MutatorStats> mutator_stats(const std::vector<Candidate>& candidates);

void write_run_record(const std::vector<Candidate>& candidates, const std::string& path);
std::vector<Candidate> read_run_record(const std::string& path);

}  // namespace evobt
