#pragma once

#include <functional>
#include <string>
#include <vector>

#include "adlab/model.hpp"

namespace adlab {

struct CeadPath {
    std::vector<double> t;
    std::vector<double> z;
    double dt = 0.0;
    std::string method = "rk4";
};

// dFit * beta * m2 at z
double cead_rhs(const ModelSpec& m, double z);

// classical fixed-step RK4; dt <= 0 selects T / 4096
CeadPath integrate_rk4(const std::function<double(double)>& rhs, double x0, double T, double dt);
CeadPath integrate(const ModelSpec& m, double x0, double T, double dt = 0.0);

// linear interpolation on the path grid
double interpolate(const CeadPath& path, double t);

struct Comparison {
    double sup_error = 0.0;
    std::vector<double> t;
    std::vector<double> error;
};

// per-time |z_traj - z_path|; on the torus the minimal arc
Comparison compare(const CeadPath& path, const std::vector<double>& t, const std::vector<double>& z,
                   const Domain& domain = {});

} // namespace adlab
