/* tslint:disable */
/* eslint-disable */

/**
 * Husimi function on an `n_theta × n_phi` grid, row-major with theta over rows.
 */
export function husimi(n: number, probe_name: string, n_theta: number, n_phi: number): Float64Array;

/**
 * Sector table of the Dicke space for `n` spins, as JSON.
 */
export function space_info(n: number): string;

/**
 * `I(t)` over a log grid with the default field and noise axis, as JSON
 * `{t, value, t_opt, i_min}`; singular points are `null`.
 */
export function sweep_curve(n: number, gamma: number, kind: string, scenario: string, count: number, t_min: number, t_max: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly husimi: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly space_info: (a: number) => [number, number, number, number];
    readonly sweep_curve: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
