/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_paths_free: (a: number, b: number) => void;
export const energyLedger: (a: number, b: number, c: number) => [number, number, number, number];
export const ensembleVsOracle: (a: number, b: number, c: number) => [number, number, number, number];
export const paths_path_count: (a: number) => number;
export const paths_records: (a: number) => number;
export const paths_sites: (a: number) => number;
export const paths_times: (a: number) => [number, number];
export const paths_values: (a: number) => [number, number];
export const simulatePaths: (a: number, b: number, c: number) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
