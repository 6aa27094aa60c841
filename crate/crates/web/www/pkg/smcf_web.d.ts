/* tslint:disable */
/* eslint-disable */

/**
 * Trajectories of several paths, flattened path-major then record-major.
 */
export class Paths {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    times(): Float64Array;
    /**
     * `values[(p * records + r) * sites + i]` is site `i` of path `p` at record `r`.
     */
    values(): Float64Array;
    readonly path_count: number;
    readonly records: number;
    readonly sites: number;
}

/**
 * JSON-encoded [`LedgerView`].
 */
export function energyLedger(config_json: string, path_index: number): string;

/**
 * JSON-encoded [`EnsembleView`].
 */
export function ensembleVsOracle(config_json: string, path_count: number): string;

export function simulatePaths(config_json: string, path_count: number): Paths;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_paths_free: (a: number, b: number) => void;
    readonly energyLedger: (a: number, b: number, c: number) => [number, number, number, number];
    readonly ensembleVsOracle: (a: number, b: number, c: number) => [number, number, number, number];
    readonly paths_path_count: (a: number) => number;
    readonly paths_records: (a: number) => number;
    readonly paths_sites: (a: number) => number;
    readonly paths_times: (a: number) => [number, number];
    readonly paths_values: (a: number) => [number, number];
    readonly simulatePaths: (a: number, b: number, c: number) => [number, number, number];
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
