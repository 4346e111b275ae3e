#ifndef SUPERHEDGE_H
#define SUPERHEDGE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes; the nonzero values match the CLI exit codes.
 */
typedef enum ShStatus {
  SH_STATUS_OK = 0,
  SH_STATUS_INVALID_ARGUMENT = 1,
  SH_STATUS_CONFIG = 2,
  SH_STATUS_NOT_HEDGEABLE = 3,
  SH_STATUS_RADIUS_DEGENERATE = 4,
  SH_STATUS_INTERNAL = 5,
} ShStatus;

/**
 * A market, scenario lattice, grid and claim loaded from a configuration.
 */
typedef struct ShProblem ShProblem;

/**
 * The value layers and policy of a solved problem.
 */
typedef struct ShSolution ShSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *sh_last_error_message(void);

/**
 * Parses a JSON configuration and builds the problem.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `base_dir` is null or a
 * NUL-terminated path used to resolve relative CSV paths; `out` must be a
 * valid pointer.
 */
enum ShStatus sh_problem_from_json(const char *json, const char *base_dir, struct ShProblem **out);

/**
 * Releases a problem. Null is ignored.
 *
 * # Safety
 * `problem` must come from [`sh_problem_from_json`] and not be used again.
 */
void sh_problem_free(struct ShProblem *problem);

/**
 * Number of risky assets in the problem's market.
 *
 * # Safety
 * `problem` must be a live handle.
 */
uintptr_t sh_problem_assets(const struct ShProblem *problem);

/**
 * Solves the configured claim.
 *
 * # Safety
 * `problem` must be a live handle and `out` a valid pointer.
 */
enum ShStatus sh_solve(const struct ShProblem *problem, struct ShSolution **out);

/**
 * Releases a solution. Null is ignored.
 *
 * # Safety
 * `solution` must come from [`sh_solve`] and not be used again.
 */
void sh_solution_free(struct ShSolution *solution);

/**
 * Hedging cost at the root with no initial risky holdings.
 *
 * # Safety
 * `solution` must be a live handle and `price` a valid pointer.
 */
enum ShStatus sh_solution_price(const struct ShSolution *solution, double *price);

/**
 * `gamma_t(node, v)` interpolated multilinearly at the risky position `v`
 * (`n` coordinates), which must lie inside the grid box.
 *
 * # Safety
 * `solution` must be a live handle, `v` must point to `n` doubles and
 * `value` must be a valid pointer.
 */
enum ShStatus sh_solution_gamma(const struct ShSolution *solution,
                                uintptr_t t,
                                uintptr_t node,
                                const double *v,
                                uintptr_t n,
                                double *value);

/**
 * Runs the no-arbitrage checks and returns the report as JSON.
 *
 * # Safety
 * `problem` must be a live handle and `out` a valid pointer; the returned
 * string must be released with [`sh_string_free`].
 */
enum ShStatus sh_check_arbitrage_json(const struct ShProblem *problem, char **out);

/**
 * `C_t(s, z)` in the problem's market, with `z = (cash, risky[0..n])`.
 *
 * # Safety
 * `state` must point to `state_len` doubles, `risky` to `n` doubles and
 * `value` must be a valid pointer.
 */
enum ShStatus sh_cost(const struct ShProblem *problem,
                      uintptr_t t,
                      const double *state,
                      uintptr_t state_len,
                      double cash,
                      const double *risky,
                      uintptr_t n,
                      double *value);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used again.
 */
void sh_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SUPERHEDGE_H */
