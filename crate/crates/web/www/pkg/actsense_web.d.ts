/* tslint:disable */
/* eslint-disable */

/**
 * Computed and closed-form exponents of the example at crossover `eps`.
 * The causal lower bound uses a coarse belief lattice to stay interactive.
 */
export function exponents(eps: number): string;

/**
 * Max error of the fixed-sample test for each `n` in `ns`, for the
 * open-loop and causal policies.
 */
export function fss_curve(eps: number, ns: Uint32Array, trials: number, seed: bigint): string;

/**
 * One run of the sequential Chernoff test: per step the control, the
 * observation, the ML estimate and its log-likelihood margin.
 */
export function sequential_trace(eps: number, c: number, truth: number, seed: bigint): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly exponents: (a: number) => [number, number, number, number];
    readonly fss_curve: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
    readonly sequential_trace: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
