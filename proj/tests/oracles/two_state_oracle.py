#!/usr/bin/env python3
"""Exact rational evaluation of the two-state steady-state example.

Prints Sigma, Abar, bbar, theta_star and sigma^2 for
P = [[.5,.5],[.5,.5]], R = [1,0], gamma = .5, Phi = [[1],[0]].
The values are frozen into env_model_test.cc.
"""
from fractions import Fraction as F

P = [[F(1, 2), F(1, 2)], [F(1, 2), F(1, 2)]]
R = [F(1), F(0)]
gamma = F(1, 2)
phi = [F(1), F(0)]
pi = [F(1, 2), F(1, 2)]

sigma = sum(pi[s] * phi[s] ** 2 for s in range(2))
abar = sum(pi[s] * phi[s] *
           sum((gamma * P[s][t] - (1 if s == t else 0)) * phi[t] for t in range(2))
           for s in range(2))
bbar = -sum(pi[s] * phi[s] * R[s] for s in range(2))
theta = bbar / abar
sigma_sq = sum(pi[s] * P[s][t] * ((R[s] + gamma * phi[t] * theta - phi[s] * theta) * phi[s]) ** 2
               for s in range(2) for t in range(2))
print("Sigma", sigma, "Abar", abar, "bbar", bbar, "theta*", theta, "sigma^2", sigma_sq)
