/* tslint:disable */
/* eslint-disable */

/**
 * Times `ct/d` at which the force changes sign, as a JSON array.
 */
export function force_sign_changes(kind: string, x0: number, x0p: number, rho: number, t_stop: number, count: number): string;

/**
 * Closed-form kernel against the regulated-quadrature oracle, as JSON.
 */
export function kernel_check(a: number, beta: number, q: number, tau: number): string;

/**
 * SVG of `E/eps0` and `F d/eps0` against `ct/d` with the light-cone windows
 * shaded. Parameters are reduced: `x0 = k0 d`, `x0p = k0' d`, `rho = d'/d`.
 */
export function scenario_svg(kind: string, x0: number, x0p: number, rho: number, t_stop: number, count: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly force_sign_changes: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
    readonly kernel_check: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly scenario_svg: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
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
