/* tslint:disable */
/* eslint-disable */

export class Hodge {
    free(): void;
    [Symbol.dispose](): void;
    after(): Float64Array;
    before(): Float64Array;
    constructor(resolution: number, strength: number);
    nx(): number;
    ny(): number;
    /**
     * `[max|D⁻·u|, max|D⁻·w|, ‖u‖², ‖w‖², ‖D⁺φ‖², CG iterations]`.
     */
    summary(): Float64Array;
}

export class Simulation {
    free(): void;
    [Symbol.dispose](): void;
    frame_count(): number;
    /**
     * `[x₀, y₀, h]` of the slice lattice.
     */
    geometry(): Float64Array;
    /**
     * Interface rows `x, y, z, νx, νy, νz, m` flattened.
     */
    interface(level: number, refine: boolean): Float64Array;
    /**
     * Runs the scenario to completion; frames are replayed afterwards.
     */
    constructor(scenario: string, scheme: string, resolution: number, frames: number);
    nx(): number;
    ny(): number;
    /**
     * Mid-plane values of frame `k`, row-major.
     */
    slice(k: number): Float64Array;
    /**
     * `[step, t, ‖g‖₂, sup|g|]` of frame `k`.
     */
    stats(k: number): Float64Array;
    /**
     * Default level for interface extraction, when the scenario has one.
     */
    suggested_level(): number | undefined;
    tau(): number;
}

export function scenario_names(): string[];

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_hodge_free: (a: number, b: number) => void;
    readonly __wbg_simulation_free: (a: number, b: number) => void;
    readonly hodge_after: (a: number) => [number, number];
    readonly hodge_before: (a: number) => [number, number];
    readonly hodge_new: (a: number, b: number) => [number, number, number];
    readonly hodge_nx: (a: number) => number;
    readonly hodge_ny: (a: number) => number;
    readonly hodge_summary: (a: number) => [number, number];
    readonly scenario_names: () => [number, number];
    readonly simulation_frame_count: (a: number) => number;
    readonly simulation_geometry: (a: number) => [number, number];
    readonly simulation_interface: (a: number, b: number, c: number) => [number, number, number, number];
    readonly simulation_new: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
    readonly simulation_nx: (a: number) => number;
    readonly simulation_ny: (a: number) => number;
    readonly simulation_slice: (a: number, b: number) => [number, number];
    readonly simulation_stats: (a: number, b: number) => [number, number];
    readonly simulation_suggested_level: (a: number) => [number, number];
    readonly simulation_tau: (a: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __externref_drop_slice: (a: number, b: number) => void;
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
