#pragma once

#include "dormancy/model.hpp"

namespace fixtures {

inline dormancy::ModelParams fig7(double lambda2 = 2.55, double q = 0.6, double K = 1000) {
  dormancy::ModelParams p;
  p.lambda1 = 3.15;
  p.lambda2 = lambda2;
  p.mu1 = 1.0;
  p.C = 1.0;
  p.D = 0.5;
  p.q = q;
  p.r = 1.0;
  p.v = 1.0;
  p.m = 10.0;
  p.sigma = 2.0;
  p.kappa = 0.1;
  p.mu3 = 0.5;
  p.K = K;
  return p;
}

inline dormancy::ModelParams fig9(double lambda2 = 3.2, double q = 0.6, double K = 1000) {
  auto p = fig7(lambda2, q, K);
  p.r = 3.0;
  p.kappa = 1.0;
  return p;
}

}  // namespace fixtures
