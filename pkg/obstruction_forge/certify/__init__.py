from .weights import (solve_rho, sigma, find_t_threshold, solve_threshold,
                      certify_grotzsch, AffineForm, AffineInequality,
                      RhoAssignment, SigmaFunction, ThresholdError,
                      MissingConstantError)
