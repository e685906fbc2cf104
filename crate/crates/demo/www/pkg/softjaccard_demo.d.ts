/* tslint:disable */
/* eslint-disable */

/**
 * Synthetic cohort distances, per-relationship summaries and ROC curves.
 */
export function cohortReport(families: number, keypoints: number, seed: number, k: number, kernel: string): string;

/**
 * Kernel values against descriptor distance, displacement and scale ratio.
 */
export function kernelCurves(scale: number, steps: number): string;

/**
 * Sex prediction from distances to the female and male supersets.
 */
export function sexClassification(families: number, keypoints: number, seed: number, k: number, kernel: string, group_fraction: number, tau: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly cohortReport: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly kernelCurves: (a: number, b: number) => [number, number, number, number];
    readonly sexClassification: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number, number];
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
