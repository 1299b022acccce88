import * as fs from 'fs'

// Binary feature container shared with the Python tooling.
// Layout (all integers little-endian):
//   magic 'RLFV' | version u32 | count u32 | featureDim u32 |
//   logitDim u32 (0 = absent) | labelFlag u32 |
//   labels: count * u32 (only when labelFlag = 1) |
//   payload: count * (featureDim + logitDim) float32, features then logits.

export const MAGIC = 'RLFV'
export const VERSION = 1
export const HEADER_BYTES = 24

export interface FeatureFile {
  count: number
  featureDim: number
  logitDim: number
  labels?: Uint32Array
  /** row-major, count x (featureDim + logitDim) */
  payload: Float32Array
}

export function writeFeatureFile(path: string, file: FeatureFile): void {
  const { count, featureDim, logitDim, labels, payload } = file
  if (payload.length !== count * (featureDim + logitDim)) {
    throw new Error(
      `payload length ${payload.length} does not match ` +
        `${count} x (${featureDim} + ${logitDim})`,
    )
  }
  if (labels && labels.length !== count) {
    throw new Error(`label count ${labels.length} does not match ${count}`)
  }
  const labelBytes = labels ? 4 * count : 0
  const buf = Buffer.alloc(HEADER_BYTES + labelBytes + 4 * payload.length)
  buf.write(MAGIC, 0, 'ascii')
  buf.writeUInt32LE(VERSION, 4)
  buf.writeUInt32LE(count, 8)
  buf.writeUInt32LE(featureDim, 12)
  buf.writeUInt32LE(logitDim, 16)
  buf.writeUInt32LE(labels ? 1 : 0, 20)
  let offset = HEADER_BYTES
  if (labels) {
    for (const label of labels) {
      buf.writeUInt32LE(label, offset)
      offset += 4
    }
  }
  Buffer.from(payload.buffer, payload.byteOffset, 4 * payload.length).copy(
    buf,
    offset,
  )
  fs.writeFileSync(path, buf)
}

export function readFeatureFile(path: string): FeatureFile {
  const buf = fs.readFileSync(path)
  if (buf.length < HEADER_BYTES) {
    throw new Error(`truncated header: ${buf.length} bytes`)
  }
  if (buf.toString('ascii', 0, 4) !== MAGIC) {
    throw new Error(`bad magic at offset 0: expected ${MAGIC}`)
  }
  const version = buf.readUInt32LE(4)
  if (version !== VERSION) {
    throw new Error(`unsupported version ${version}`)
  }
  const count = buf.readUInt32LE(8)
  const featureDim = buf.readUInt32LE(12)
  const logitDim = buf.readUInt32LE(16)
  const labelFlag = buf.readUInt32LE(20)
  const labelBytes = labelFlag ? 4 * count : 0
  const payloadValues = count * (featureDim + logitDim)
  const expected = HEADER_BYTES + labelBytes + 4 * payloadValues
  if (buf.length !== expected) {
    throw new Error(
      `file size ${buf.length} does not match header-implied ${expected}`,
    )
  }
  let labels: Uint32Array | undefined
  if (labelFlag) {
    labels = new Uint32Array(count)
    for (let i = 0; i < count; i++) {
      labels[i] = buf.readUInt32LE(HEADER_BYTES + 4 * i)
    }
  }
  const payload = new Float32Array(payloadValues)
  const base = HEADER_BYTES + labelBytes
  for (let i = 0; i < payloadValues; i++) {
    payload[i] = buf.readFloatLE(base + 4 * i)
  }
  return { count, featureDim, logitDim, labels, payload }
}
