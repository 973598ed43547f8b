/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_hodge_free: (a: number, b: number) => void;
export const __wbg_simulation_free: (a: number, b: number) => void;
export const hodge_after: (a: number) => [number, number];
export const hodge_before: (a: number) => [number, number];
export const hodge_new: (a: number, b: number) => [number, number, number];
export const hodge_nx: (a: number) => number;
export const hodge_ny: (a: number) => number;
export const hodge_summary: (a: number) => [number, number];
export const scenario_names: () => [number, number];
export const simulation_frame_count: (a: number) => number;
export const simulation_geometry: (a: number) => [number, number];
export const simulation_interface: (a: number, b: number, c: number) => [number, number, number, number];
export const simulation_new: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
export const simulation_nx: (a: number) => number;
export const simulation_ny: (a: number) => number;
export const simulation_slice: (a: number, b: number) => [number, number];
export const simulation_stats: (a: number, b: number) => [number, number];
export const simulation_suggested_level: (a: number) => [number, number];
export const simulation_tau: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_table_dealloc: (a: number) => void;
export const __externref_drop_slice: (a: number, b: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
