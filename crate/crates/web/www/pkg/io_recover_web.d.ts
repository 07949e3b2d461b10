/* tslint:disable */
/* eslint-disable */

/**
 * Ids, names and models of the bundled examples.
 */
export function examples(): string;

/**
 * Applies one perturbation (`rhs`, `prior` or `weight`) to the trivial row of
 * example `id` and re-solves. The suggested magnitude is used when the
 * diagnosis offers one; otherwise a weight of 10 is tried anyway so the page
 * can show that it does not help.
 */
export function remediate_example(id: number, kind: string, x0: number, y0: number, xmax: number, ymax: number): string;

/**
 * Solves example `id` with x̂ moved to (x1, x2). `norm` replaces the prior's
 * norm for the strong-duality models; pass an empty string to keep it.
 */
export function solve_example(id: number, x1: number, x2: number, norm: string, x0: number, y0: number, xmax: number, ymax: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly examples: () => [number, number];
    readonly remediate_example: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number];
    readonly solve_example: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
