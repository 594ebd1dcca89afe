#pragma once

// Shared test fixtures: the two-producer study system used across suites.

#include "ccmkt/market.hpp"

namespace fixtures {

inline ccmkt::ProducerParams producer_one() {
  return ccmkt::ProducerParams{10.0, 32.0, 10.0, 10.0, 1.0};
}

inline ccmkt::ProducerParams producer_two() {
  return ccmkt::ProducerParams{10.0, 44.0, 10.0, 3.0, 3.0};
}

inline ccmkt::MarketConfig two_producer_market() {
  ccmkt::MarketConfig m;
  m.producers = {producer_one(), producer_two()};
  m.load = 100.0;
  m.wind_forecast = 50.0;
  m.spill_cost = 100.0;
  m.shed_cost = 300.0;
  return m;
}

}  // namespace fixtures
