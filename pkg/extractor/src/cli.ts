import { parseArgs } from 'util'
import { runExtraction } from './extract'

const usage = `usage: extract --images <dir> --model <checkpoint dir> --out <file.rlfv>
               [--resize 32] [--batch-size 64] [--quiet]`

async function main(): Promise<number> {
  const { values } = parseArgs({
    options: {
      images: { type: 'string' },
      model: { type: 'string' },
      out: { type: 'string' },
      resize: { type: 'string', default: '32' },
      'batch-size': { type: 'string', default: '64' },
      quiet: { type: 'boolean', default: false },
      help: { type: 'boolean', default: false },
    },
  })
  if (values.help) {
    console.log(usage)
    return 0
  }
  if (!values.images || !values.model || !values.out) {
    console.error(usage)
    return 1
  }
  const report = await runExtraction({
    imageDir: values.images,
    modelDir: values.model,
    outputPath: values.out,
    resize: parseInt(values.resize as string, 10),
    batchSize: parseInt(values['batch-size'] as string, 10),
    quiet: values.quiet as boolean,
  })
  console.log(
    `wrote ${report.count} records (features ${report.featureDim}, ` +
      `logits ${report.logitDim}, labels ${report.labeled}) to ${values.out}` +
      (report.skipped ? `; skipped ${report.skipped} unreadable` : ''),
  )
  return 0
}

main()
  .then(code => process.exit(code))
  .catch(err => {
    console.error(`error: ${err.message ?? err}`)
    process.exit(1)
  })
