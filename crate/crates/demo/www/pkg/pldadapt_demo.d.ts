/* tslint:disable */
/* eslint-disable */

/**
 * minCprimary / EER against the interpolation weight on a small synthetic
 * corpus, for the plain and regularized interpolations.
 */
export function alpha_sweep(seed: number, shift_lo: number, shift_hi: number, steps: number): string;

/**
 * Contours of `y`, `z` and `gamma_max(y, z)` for 2x2 inputs `[xx, xy, yy]`.
 */
export function gamma_max_2x2(y: Float64Array, z: Float64Array): string;

/**
 * Contours of every preset's adapted covariance for one 2x2 catalog.
 */
export function presets_2x2(ood: Float64Array, ind: Float64Array, c_ood: Float64Array, c_ind: Float64Array, alpha: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly alpha_sweep: (a: number, b: number, c: number, d: number) => [number, number];
    readonly gamma_max_2x2: (a: number, b: number, c: number, d: number) => [number, number];
    readonly presets_2x2: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
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
