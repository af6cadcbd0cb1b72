#ifndef RSM_SHREDDER_HPP
#define RSM_SHREDDER_HPP

// The paper-shredder example: A ($20, 7 sheets), B ($50, 11 sheets) and
// C ($95, 12 sheets), shown as {A, B} and as {A, B, C}.

#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rsm/data.hpp"
#include "rsm/markov.hpp"
#include "rsm/tolerances.hpp"
#include "rsm/topology.hpp"

namespace rsm::shredder {

inline constexpr double kLambda = 0.15;
inline constexpr double kPriceWeight = 0.6;
inline constexpr double kCapacityWeight = 0.4;

inline Schema schema() {
  Schema s;
  s.features = {{"price", Direction::LowerIsBetter, FeatureKind::Numeric},
                {"capacity", Direction::HigherIsBetter, FeatureKind::Numeric}};
  s.include_position = false;
  return s;
}

/// The two displayed contexts. Click counts are illustrative (A ahead of B
/// alone, B ahead of A next to C); only the specifications come from the
/// example.
inline std::vector<LogRow> rows() {
  auto item = [](std::string id, double pos, std::uint64_t clicks, double price, double cap) {
    return ItemObservation{std::move(id), pos, clicks, {price, cap}};
  };
  LogRow ab{"paper shredders", "AB", {item("A", 1, 12, 20, 7), item("B", 2, 6, 50, 11)}, {}};
  LogRow abc{"paper shredders",
             "ABC",
             {item("A", 1, 5, 20, 7), item("B", 2, 11, 50, 11), item("C", 3, 4, 95, 12)},
             {}};
  return {ab, abc};
}

struct ContextOutcome {
  std::string context_id;
  std::vector<std::string> item_ids;
  std::vector<double> stationary;      // item order
  std::vector<RankedItem> ranking;
  double margin = 0.0;  // p_A - p_B
  bool a_above_b() const { return margin > tolerances::rank_tie; }
  bool b_above_a() const { return margin < -tolerances::rank_tie; }
};

struct Outcome {
  double price_weight = 0.0;
  double capacity_weight = 0.0;
  ContextOutcome pair;    // {A, B}
  ContextOutcome triple;  // {A, B, C}
  /// A above B alone and B above A once C is shown.
  bool flip() const { return pair.a_above_b() && triple.b_above_a(); }
};

inline ContextOutcome rank_context(const LogRow& row, const WeightVector& w, double lambda) {
  const auto ctx = build_context(row, schema());
  const StochasticMatrix P = combine(ctx->topologies, w, lambda);
  const Distribution p = stationary(P);
  ContextOutcome out;
  out.context_id = row.context_id;
  out.item_ids = ctx->item_ids;
  out.stationary.assign(p.probs().data(), p.probs().data() + p.size());
  out.ranking = rank_items(P, ctx->item_ids);
  const auto ia = *row.index_of("A"), ib = *row.index_of("B");
  out.margin = out.stationary[ia] - out.stationary[ib];
  return out;
}

/// Weights are normalized to sum 1 before combining.
inline Outcome evaluate(double price_weight, double capacity_weight, double lambda = kLambda) {
  const double total = price_weight + capacity_weight;
  if (!(total > 0.0))
    throw InvalidInput("shredder weights must not both be zero");
  const WeightVector w = WeightVector::reporting({price_weight / total, capacity_weight / total});
  const auto r = rows();
  return {price_weight, capacity_weight, rank_context(r[0], w, lambda), rank_context(r[1], w, lambda)};
}

struct FlipSearch {
  std::size_t candidates = 0;
  std::optional<Outcome> first_flip;
};

/// Scans (price, capacity) weights on the grid [0,1]^2 with the given step.
inline FlipSearch search_flip_weights(double step = 0.01, double lambda = kLambda) {
  FlipSearch out;
  const auto steps = static_cast<int>(std::lround(1.0 / step));
  for (int a = 0; a <= steps; ++a) {
    for (int b = 0; b <= steps; ++b) {
      if (a == 0 && b == 0)
        continue;
      ++out.candidates;
      const Outcome o = evaluate(a * step, b * step, lambda);
      if (o.flip()) {
        out.first_flip = o;
        return out;
      }
    }
  }
  return out;
}

/// Documented configuration: the example's (0.6, 0.4) if it flips, else the
/// first flipping grid point, else (0.6, 0.4) with no flip.
inline Outcome documented_configuration() {
  Outcome base = evaluate(kPriceWeight, kCapacityWeight);
  if (base.flip())
    return base;
  const FlipSearch search = search_flip_weights();
  return search.first_flip ? *search.first_flip : base;
}

inline void print_context(std::ostream& out, const ContextOutcome& c) {
  char buf[128];
  out << "context {";
  for (std::size_t i = 0; i < c.item_ids.size(); ++i)
    out << (i ? "," : "") << c.item_ids[i];
  out << "}\n  stationary:";
  for (std::size_t i = 0; i < c.item_ids.size(); ++i) {
    std::snprintf(buf, sizeof buf, " %s=%.6f", c.item_ids[i].c_str(), c.stationary[i]);
    out << buf;
  }
  out << "\n  ranking:";
  for (const auto& r : c.ranking)
    out << ' ' << r.item_id;
  out << "\n  A vs B: " << (c.a_above_b() ? "A above B" : c.b_above_a() ? "B above A" : "tie") << '\n';
}

inline void print_report(std::ostream& out) {
  char buf[160];
  out << "paper shredders: A $20/7 sheets, B $50/11 sheets, C $95/12 sheets\n";
  std::snprintf(buf, sizeof buf, "rank-encoded topologies, lambda = %.2f\n", kLambda);
  out << buf;
  const Outcome paper = evaluate(kPriceWeight, kCapacityWeight);
  std::snprintf(buf, sizeof buf, "weights: price %.2f, capacity %.2f\n", paper.price_weight,
                paper.capacity_weight);
  out << buf;
  print_context(out, paper.pair);
  print_context(out, paper.triple);
  out << "flip (A>B in {A,B}, B>A in {A,B,C}): " << (paper.flip() ? "yes" : "no") << '\n';
  if (paper.flip())
    return;

  const FlipSearch search = search_flip_weights();
  std::snprintf(buf, sizeof buf, "searched %zu weight pairs on [0,1]^2, step 0.01: ", search.candidates);
  out << buf;
  if (!search.first_flip) {
    out << "none produce the flip under the rank encoding\n";
    return;
  }
  std::snprintf(buf, sizeof buf, "flip at price %.2f, capacity %.2f\n", search.first_flip->price_weight,
                search.first_flip->capacity_weight);
  out << buf;
  print_context(out, search.first_flip->pair);
  print_context(out, search.first_flip->triple);
}

} // namespace rsm::shredder

#endif // RSM_SHREDDER_HPP
