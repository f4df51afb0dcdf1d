// oracle.hpp - truncated-basis diagonalization of the unified Hamiltonian and
// of its bosonic realizations
//
// Matrices are spin-major: rows 0..N-1 carry the first spin state, rows
// N..2N-1 the second, each over ladder levels m = 0..N-1.  States with m >= N
// are dropped.

#pragma once

#include "nlrabi/algebra.hpp"
#include "nlrabi/gfunction.hpp"

#include <Eigen/Dense>

#include <vector>

namespace nlrabi {

enum class SpinBasis { SigmaZ, SigmaX };

struct TruncatedHamiltonian {
    int N = 0;
    Eigen::MatrixXd matrix;
    SpinBasis basis = SpinBasis::SigmaZ;
    ModelParams params;
};

/// Unified Hamiltonian in the unified frame of p (no energy shift). g = 0 is allowed.
TruncatedHamiltonian build_unified(const ModelParams& p, int N, SpinBasis basis = SpinBasis::SigmaZ);

/// Native Fock-space Hamiltonian of a physical realization (H_2p, H_2m or H_I),
/// restricted to the sector selected by k.
TruncatedHamiltonian build_realization(const ModelParams& model, int N);

/// Lowest n eigenvalues, ascending.
std::vector<double> eigen_sym(const Eigen::MatrixXd& h, int n_lowest);
std::vector<double> eigen_sym(const TruncatedHamiltonian& h, int n_lowest);

/// Diagonal of Pi = -sigma_z (x) (-1)^m in the SigmaZ spin-major basis.
Eigen::VectorXd parity_diagonal(int N);

struct ParityBlocks {
    Eigen::MatrixXd even;
    Eigen::MatrixXd odd;
    std::vector<int> even_index;  // rows of the full matrix in each block
    std::vector<int> odd_index;
};

/// Requires a SigmaZ-basis matrix.
ParityBlocks parity_project(const TruncatedHamiltonian& h);

struct Su11Matrices {
    Eigen::MatrixXd k0;
    Eigen::MatrixXd kplus;
    Eigen::MatrixXd kminus;
};

Su11Matrices truncated_generators(double k, int N);

/// Parity-labelled lowest levels in the model frame of p (realization builder
/// for physical models, unified builder otherwise).
SpectrumResult oracle_spectrum(const ModelParams& p, int N, int n_levels);

struct ConvergenceReport {
    int N = 0;
    double max_diff = 0.0;  // lowest n levels, N vs 2N
    bool converged = false;
    std::vector<double> coarse;
    std::vector<double> fine;
};

ConvergenceReport certify_convergence(const ModelParams& p, int N, int n_levels, double tol);

}  // namespace nlrabi
