/**
 * The ".dpf" feature-file format and its manifest, as consumed by the
 * pruning toolkit.
 *
 * Layout (little-endian): magic "DPTL" | version u16=1 | flags u16
 * (bit 0 = labels present) | n_samples u64 | dim u32 | reserved u32=0 |
 * n*dim float32 row-major | n uint32 labels when flagged.
 */

import * as fs from 'fs'

export const MAGIC = 'DPTL'
export const VERSION = 1
export const HEADER_BYTES = 24

export interface FeatureSet {
  nSamples: number
  dim: number
  /** row-major, length nSamples * dim, finite */
  features: Float32Array
  labels?: Uint32Array
}

export interface Manifest {
  n_classes: number
  class_names: string[] | null
  per_class_counts: number[]
}

export function validateFeatureSet(set: FeatureSet): void {
  if (set.nSamples < 0 || set.dim < 1) {
    throw new Error(`invalid shape ${set.nSamples} x ${set.dim}`)
  }
  if (set.features.length !== set.nSamples * set.dim) {
    throw new Error(
      `features length ${set.features.length} != ${set.nSamples} * ${set.dim}`,
    )
  }
  for (let i = 0; i < set.features.length; i++) {
    if (!Number.isFinite(set.features[i])) {
      throw new Error(`non-finite feature at index ${i}`)
    }
  }
  if (set.labels && set.labels.length !== set.nSamples) {
    throw new Error(`labels length ${set.labels.length} != ${set.nSamples}`)
  }
}

export function encodeFeatureSet(set: FeatureSet): Buffer {
  validateFeatureSet(set)
  const labelBytes = set.labels ? set.nSamples * 4 : 0
  const buf = Buffer.alloc(HEADER_BYTES + set.features.length * 4 + labelBytes)
  buf.write(MAGIC, 0, 'ascii')
  buf.writeUInt16LE(VERSION, 4)
  buf.writeUInt16LE(set.labels ? 1 : 0, 6)
  buf.writeBigUInt64LE(BigInt(set.nSamples), 8)
  buf.writeUInt32LE(set.dim, 16)
  buf.writeUInt32LE(0, 20)
  let off = HEADER_BYTES
  for (let i = 0; i < set.features.length; i++, off += 4) {
    buf.writeFloatLE(set.features[i], off)
  }
  if (set.labels) {
    for (let i = 0; i < set.labels.length; i++, off += 4) {
      buf.writeUInt32LE(set.labels[i], off)
    }
  }
  return buf
}

export function writeFeatureSet(set: FeatureSet, path: string): void {
  fs.writeFileSync(path, encodeFeatureSet(set))
}

export function readFeatureSet(path: string): FeatureSet {
  const buf = fs.readFileSync(path)
  if (buf.length < HEADER_BYTES) {
    throw new Error(`truncated header: ${buf.length} < ${HEADER_BYTES} bytes`)
  }
  if (buf.toString('ascii', 0, 4) !== MAGIC) {
    throw new Error(`bad magic ${JSON.stringify(buf.toString('ascii', 0, 4))}`)
  }
  const version = buf.readUInt16LE(4)
  if (version !== VERSION) throw new Error(`unsupported version ${version}`)
  const flags = buf.readUInt16LE(6)
  if (flags & ~1) throw new Error(`unknown flag bits ${flags}`)
  const nSamples = Number(buf.readBigUInt64LE(8))
  const dim = buf.readUInt32LE(16)
  const hasLabels = (flags & 1) === 1
  const expected = HEADER_BYTES + nSamples * dim * 4 + (hasLabels ? nSamples * 4 : 0)
  if (buf.length !== expected) {
    throw new Error(`length mismatch: expected ${expected} bytes, got ${buf.length}`)
  }
  const features = new Float32Array(nSamples * dim)
  let off = HEADER_BYTES
  for (let i = 0; i < features.length; i++, off += 4) {
    features[i] = buf.readFloatLE(off)
    if (!Number.isFinite(features[i])) throw new Error(`non-finite feature at ${i}`)
  }
  let labels: Uint32Array | undefined
  if (hasLabels) {
    labels = new Uint32Array(nSamples)
    for (let i = 0; i < nSamples; i++, off += 4) {
      labels[i] = buf.readUInt32LE(off)
    }
  }
  return { nSamples, dim, features, labels }
}

export function writeManifest(manifest: Manifest, path: string): void {
  if (manifest.per_class_counts.length !== manifest.n_classes) {
    throw new Error('per_class_counts length must equal n_classes')
  }
  fs.writeFileSync(path, JSON.stringify(manifest, null, 2) + '\n')
}
